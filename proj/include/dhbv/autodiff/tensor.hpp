#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace dhbv::ad {

/**
 * Dense row-major matrix of doubles.
 *
 * A 1x1 tensor acts as a scalar. Binary elementwise kernels broadcast any
 * dimension of size 1 against the other operand (numpy rules restricted to
 * rank 2).
 */
class Tensor {
public:
    Tensor() = default;
    Tensor(std::size_t rows, std::size_t cols, double fill = 0.0);
    Tensor(std::size_t rows, std::size_t cols, std::vector<double> data);

    static Tensor scalar(double v) { return Tensor(1, 1, v); }
    /// Column vector [n x 1].
    static Tensor column(std::vector<double> v);
    /// Row vector [1 x n].
    static Tensor row(std::vector<double> v);
    static Tensor matrix(std::initializer_list<std::initializer_list<double>> rows);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }
    bool is_scalar() const { return rows_ == 1 && cols_ == 1; }
    bool same_shape(const Tensor& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }

    std::span<double> values() { return data_; }
    std::span<const double> values() const { return data_; }
    const std::vector<double>& storage() const { return data_; }

    /// Value of a 1x1 tensor.
    double item() const;
    bool all_finite() const;
    std::string shape_string() const;

    Tensor& operator+=(const Tensor& o);

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

bool operator==(const Tensor& a, const Tensor& b);

// ---------------------------------------------------------------------------
// Value kernels. The tape records these; the same names overload on Variable
// so model code can be written once for both.
// ---------------------------------------------------------------------------

Tensor operator+(const Tensor& a, const Tensor& b);
Tensor operator-(const Tensor& a, const Tensor& b);
Tensor operator*(const Tensor& a, const Tensor& b);
Tensor operator/(const Tensor& a, const Tensor& b);
Tensor operator-(const Tensor& a);
Tensor operator+(const Tensor& a, double b);
Tensor operator+(double a, const Tensor& b);
Tensor operator-(const Tensor& a, double b);
Tensor operator-(double a, const Tensor& b);
Tensor operator*(const Tensor& a, double b);
Tensor operator*(double a, const Tensor& b);
Tensor operator/(const Tensor& a, double b);
Tensor operator/(double a, const Tensor& b);

Tensor min(const Tensor& a, const Tensor& b);
Tensor max(const Tensor& a, const Tensor& b);
Tensor min(const Tensor& a, double b);
Tensor max(const Tensor& a, double b);
Tensor clamp(const Tensor& x, double lo, double hi);

Tensor exp(const Tensor& x);
Tensor log(const Tensor& x);
Tensor log10(const Tensor& x);
Tensor sqrt(const Tensor& x);
Tensor abs(const Tensor& x);
Tensor sigmoid(const Tensor& x);
Tensor tanh(const Tensor& x);
Tensor relu(const Tensor& x);
Tensor lgamma(const Tensor& x);
Tensor pow(const Tensor& base, double exponent);
/// exp(exponent * log(max(base, 1e-8)))
Tensor pow(const Tensor& base, const Tensor& exponent);

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);
/// Columns [begin, begin + count).
Tensor slice_cols(const Tensor& a, std::size_t begin, std::size_t count);
Tensor concat_cols(const Tensor& a, const Tensor& b);
/// Rows [begin, begin + count). Value-only helper for data plumbing.
Tensor slice_rows(const Tensor& a, std::size_t begin, std::size_t count);
Tensor sum(const Tensor& a);
Tensor mean(const Tensor& a);

/// 1 where a < b elementwise, else 0 (broadcasting). Not differentiable.
Tensor less_mask(const Tensor& a, const Tensor& b);

/// Identity for tensors; lets templated model code strip gradient tracking.
inline const Tensor& value_of(const Tensor& t) { return t; }

/// Smallest base admitted by pow with a tensor exponent.
inline constexpr double kPowBaseFloor = 1e-8;

namespace detail {
/// Output shape for a broadcasting binary op; throws on incompatible shapes.
std::pair<std::size_t, std::size_t> broadcast_shape(const Tensor& a, const Tensor& b, const char* op);
/// Sum `grad` down to `rows x cols` (the inverse of broadcasting).
Tensor reduce_to(const Tensor& grad, std::size_t rows, std::size_t cols);
/// Throws DomainError-style NumericsError if any entry violates the op's domain.
void check_domain(const char* op, const Tensor& x, long node_id = -1);
/// out += op(a) * op(b), op being an optional transpose.
void matmul_accumulate(const Tensor& a, bool transpose_a, const Tensor& b, bool transpose_b, Tensor& out);
}  // namespace detail

}  // namespace dhbv::ad
