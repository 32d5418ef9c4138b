#include "dhbv/autodiff/tensor.hpp"

#include "dhbv/autodiff/special.hpp"
#include "dhbv/error.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace dhbv::ad {

using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMajor>;
using MutMap = Eigen::Map<RowMajor>;

Tensor::Tensor(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Tensor::Tensor(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows * cols) {
        throw std::invalid_argument("Tensor: data size does not match shape");
    }
}

Tensor Tensor::column(std::vector<double> v) {
    const auto n = v.size();
    return Tensor(n, 1, std::move(v));
}

Tensor Tensor::row(std::vector<double> v) {
    const auto n = v.size();
    return Tensor(1, n, std::move(v));
}

Tensor Tensor::matrix(std::initializer_list<std::initializer_list<double>> rows) {
    const std::size_t r = rows.size();
    const std::size_t c = r == 0 ? 0 : rows.begin()->size();
    std::vector<double> d;
    d.reserve(r * c);
    for (const auto& row : rows) {
        if (row.size() != c) throw std::invalid_argument("Tensor::matrix: ragged rows");
        d.insert(d.end(), row.begin(), row.end());
    }
    return Tensor(r, c, std::move(d));
}

double Tensor::item() const {
    if (!is_scalar()) {
        throw std::invalid_argument("Tensor::item on non-scalar tensor " + shape_string());
    }
    return data_[0];
}

bool Tensor::all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

std::string Tensor::shape_string() const {
    std::ostringstream os;
    os << '[' << rows_ << 'x' << cols_ << ']';
    return os.str();
}

Tensor& Tensor::operator+=(const Tensor& o) {
    if (!same_shape(o)) throw std::invalid_argument("Tensor +=: shape mismatch");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
    return *this;
}

bool operator==(const Tensor& a, const Tensor& b) {
    return a.same_shape(b) && a.storage() == b.storage();
}

namespace detail {

std::pair<std::size_t, std::size_t> broadcast_shape(const Tensor& a, const Tensor& b, const char* op) {
    auto dim = [&](std::size_t x, std::size_t y) {
        if (x == y || y == 1) return x;
        if (x == 1) return y;
        throw std::invalid_argument(std::string(op) + ": cannot broadcast " + a.shape_string() +
                                    " with " + b.shape_string());
    };
    return {dim(a.rows(), b.rows()), dim(a.cols(), b.cols())};
}

Tensor reduce_to(const Tensor& grad, std::size_t rows, std::size_t cols) {
    if (grad.rows() == rows && grad.cols() == cols) return grad;
    Tensor out(rows, cols, 0.0);
    for (std::size_t r = 0; r < grad.rows(); ++r) {
        const std::size_t rr = rows == 1 ? 0 : r;
        for (std::size_t c = 0; c < grad.cols(); ++c) {
            out(rr, cols == 1 ? 0 : c) += grad(r, c);
        }
    }
    return out;
}

void check_domain(const char* op, const Tensor& x, long node_id) {
    const std::string name(op);
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double v = x[i];
        bool bad = false;
        if (name == "log" || name == "log10" || name == "lgamma") bad = !(v > 0.0);
        else if (name == "sqrt") bad = !(v >= 0.0);
        if (bad) {
            std::ostringstream os;
            os << "domain error in " << op << ": argument " << v << " at entry " << i;
            if (node_id >= 0) os << " (node " << node_id << ')';
            throw NumericsError(os.str());
        }
    }
}

}  // namespace detail

namespace {

template <class F>
Tensor binary(const Tensor& a, const Tensor& b, const char* op, F f) {
    if (a.same_shape(b)) {
        Tensor out(a.rows(), a.cols());
        for (std::size_t i = 0; i < a.size(); ++i) out[i] = f(a[i], b[i]);
        return out;
    }
    const auto [rows, cols] = detail::broadcast_shape(a, b, op);
    Tensor out(rows, cols);
    for (std::size_t r = 0; r < rows; ++r) {
        const std::size_t ra = a.rows() == 1 ? 0 : r;
        const std::size_t rb = b.rows() == 1 ? 0 : r;
        for (std::size_t c = 0; c < cols; ++c) {
            out(r, c) = f(a(ra, a.cols() == 1 ? 0 : c), b(rb, b.cols() == 1 ? 0 : c));
        }
    }
    return out;
}

template <class F>
Tensor unary(const Tensor& x, F f) {
    Tensor out(x.rows(), x.cols());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = f(x[i]);
    return out;
}

double sigmoid_scalar(double v) {
    if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
    const double e = std::exp(v);
    return e / (1.0 + e);
}

}  // namespace

Tensor operator+(const Tensor& a, const Tensor& b) { return binary(a, b, "add", std::plus<>{}); }
Tensor operator-(const Tensor& a, const Tensor& b) { return binary(a, b, "sub", std::minus<>{}); }
Tensor operator*(const Tensor& a, const Tensor& b) { return binary(a, b, "mul", std::multiplies<>{}); }
Tensor operator/(const Tensor& a, const Tensor& b) { return binary(a, b, "div", std::divides<>{}); }
Tensor operator-(const Tensor& a) { return unary(a, [](double v) { return -v; }); }
Tensor operator+(const Tensor& a, double b) { return unary(a, [b](double v) { return v + b; }); }
Tensor operator+(double a, const Tensor& b) { return b + a; }
Tensor operator-(const Tensor& a, double b) { return unary(a, [b](double v) { return v - b; }); }
Tensor operator-(double a, const Tensor& b) { return unary(b, [a](double v) { return a - v; }); }
Tensor operator*(const Tensor& a, double b) { return unary(a, [b](double v) { return v * b; }); }
Tensor operator*(double a, const Tensor& b) { return b * a; }
Tensor operator/(const Tensor& a, double b) { return unary(a, [b](double v) { return v / b; }); }
Tensor operator/(double a, const Tensor& b) { return unary(b, [a](double v) { return a / v; }); }

// Ties resolve to the first argument (matches the gradient rule on the tape).
Tensor min(const Tensor& a, const Tensor& b) {
    return binary(a, b, "min", [](double x, double y) { return x <= y ? x : y; });
}
Tensor max(const Tensor& a, const Tensor& b) {
    return binary(a, b, "max", [](double x, double y) { return x >= y ? x : y; });
}
Tensor min(const Tensor& a, double b) { return min(a, Tensor::scalar(b)); }
Tensor max(const Tensor& a, double b) { return max(a, Tensor::scalar(b)); }

Tensor clamp(const Tensor& x, double lo, double hi) {
    if (lo > hi) throw std::invalid_argument("clamp: lo > hi");
    return unary(x, [lo, hi](double v) { return std::clamp(v, lo, hi); });
}

Tensor exp(const Tensor& x) { return unary(x, [](double v) { return std::exp(v); }); }
Tensor log(const Tensor& x) {
    detail::check_domain("log", x);
    return unary(x, [](double v) { return std::log(v); });
}
Tensor log10(const Tensor& x) {
    detail::check_domain("log10", x);
    return unary(x, [](double v) { return std::log10(v); });
}
Tensor sqrt(const Tensor& x) {
    detail::check_domain("sqrt", x);
    return unary(x, [](double v) { return std::sqrt(v); });
}
Tensor abs(const Tensor& x) { return unary(x, [](double v) { return std::abs(v); }); }
Tensor sigmoid(const Tensor& x) { return unary(x, sigmoid_scalar); }
Tensor tanh(const Tensor& x) { return unary(x, [](double v) { return std::tanh(v); }); }
Tensor relu(const Tensor& x) { return unary(x, [](double v) { return v > 0.0 ? v : 0.0; }); }
Tensor lgamma(const Tensor& x) {
    detail::check_domain("lgamma", x);
    return unary(x, log_gamma);
}
Tensor pow(const Tensor& base, double exponent) {
    return unary(base, [exponent](double v) { return std::pow(v, exponent); });
}
Tensor pow(const Tensor& base, const Tensor& exponent) {
    return binary(base, exponent, "pow", [](double b, double e) {
        return std::exp(e * std::log(std::max(b, kPowBaseFloor)));
    });
}

Tensor matmul(const Tensor& a, const Tensor& b) {
    if (a.cols() != b.rows()) {
        throw std::invalid_argument("matmul: shape mismatch " + a.shape_string() + " x " +
                                    b.shape_string());
    }
    Tensor out(a.rows(), b.cols());
    MutMap(out.values().data(), a.rows(), b.cols()).noalias() =
        ConstMap(a.values().data(), a.rows(), a.cols()) * ConstMap(b.values().data(), b.rows(), b.cols());
    return out;
}

Tensor transpose(const Tensor& a) {
    Tensor out(a.cols(), a.rows());
    for (std::size_t r = 0; r < a.rows(); ++r)
        for (std::size_t c = 0; c < a.cols(); ++c) out(c, r) = a(r, c);
    return out;
}

Tensor slice_cols(const Tensor& a, std::size_t begin, std::size_t count) {
    if (begin + count > a.cols()) {
        throw std::invalid_argument("slice_cols: range out of bounds for " + a.shape_string());
    }
    Tensor out(a.rows(), count);
    for (std::size_t r = 0; r < a.rows(); ++r)
        for (std::size_t c = 0; c < count; ++c) out(r, c) = a(r, begin + c);
    return out;
}

Tensor slice_rows(const Tensor& a, std::size_t begin, std::size_t count) {
    if (begin + count > a.rows()) {
        throw std::invalid_argument("slice_rows: range out of bounds for " + a.shape_string());
    }
    const auto first = a.storage().begin() + static_cast<std::ptrdiff_t>(begin * a.cols());
    return Tensor(count, a.cols(), std::vector<double>(first, first + static_cast<std::ptrdiff_t>(count * a.cols())));
}

Tensor concat_cols(const Tensor& a, const Tensor& b) {
    if (a.rows() != b.rows()) {
        throw std::invalid_argument("concat_cols: row mismatch " + a.shape_string() + " vs " +
                                    b.shape_string());
    }
    Tensor out(a.rows(), a.cols() + b.cols());
    for (std::size_t r = 0; r < a.rows(); ++r) {
        for (std::size_t c = 0; c < a.cols(); ++c) out(r, c) = a(r, c);
        for (std::size_t c = 0; c < b.cols(); ++c) out(r, a.cols() + c) = b(r, c);
    }
    return out;
}

Tensor sum(const Tensor& a) {
    double s = 0.0;
    for (double v : a.values()) s += v;
    return Tensor::scalar(s);
}

Tensor mean(const Tensor& a) {
    if (a.empty()) throw std::invalid_argument("mean of empty tensor");
    return Tensor::scalar(sum(a).item() / static_cast<double>(a.size()));
}

Tensor less_mask(const Tensor& a, const Tensor& b) {
    return binary(a, b, "less", [](double x, double y) { return x < y ? 1.0 : 0.0; });
}

void detail::matmul_accumulate(const Tensor& a, bool ta, const Tensor& b, bool tb, Tensor& out) {
    ConstMap ma(a.values().data(), a.rows(), a.cols());
    ConstMap mb(b.values().data(), b.rows(), b.cols());
    MutMap mo(out.values().data(), out.rows(), out.cols());
    if (ta && tb) mo.noalias() += ma.transpose() * mb.transpose();
    else if (ta) mo.noalias() += ma.transpose() * mb;
    else if (tb) mo.noalias() += ma * mb.transpose();
    else mo.noalias() += ma * mb;
}

}  // namespace dhbv::ad
