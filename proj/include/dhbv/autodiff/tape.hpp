#pragma once

#include "dhbv/autodiff/tensor.hpp"

#include <array>
#include <cstdint>
#include <deque>
#include <initializer_list>
#include <string_view>
#include <vector>

namespace dhbv::ad {

enum class OpKind : std::uint8_t {
    Leaf,
    Constant,
    Add,
    Sub,
    Mul,
    Div,
    Neg,
    AddScalar,
    MulScalar,
    RDivScalar,  // c / x
    PowConst,
    Exp,
    Log,
    Log10,
    Sqrt,
    Abs,
    Sigmoid,
    Tanh,
    Relu,
    Lgamma,
    Min,
    Max,
    Clamp,
    MatMul,
    Transpose,
    SliceCols,
    ConcatCols,
    Sum,
    Mean,
};

std::string_view op_name(OpKind kind);

class Tape;

/// Handle to a node on a Tape. Cheap to copy; valid while the tape lives.
class Variable {
public:
    Variable() = default;

    Tape* tape() const { return tape_; }
    int id() const { return id_; }
    bool valid() const { return tape_ != nullptr; }
    const Tensor& value() const;
    std::size_t rows() const { return value().rows(); }
    std::size_t cols() const { return value().cols(); }

private:
    friend class Tape;
    Variable(Tape* tape, int id) : tape_(tape), id_(id) {}

    Tape* tape_ = nullptr;
    int id_ = -1;
};

inline const Tensor& value_of(const Variable& v) { return v.value(); }

/// Adjoints produced by Tape::backward, indexed by node id.
class Gradients {
public:
    Gradients() = default;
    explicit Gradients(std::vector<Tensor> adjoints) : adjoints_(std::move(adjoints)) {}

    /// Adjoint of `v`; a zero tensor of v's shape if nothing flowed into it.
    Tensor wrt(const Variable& v) const;
    bool has(int node_id) const;
    std::size_t size() const { return adjoints_.size(); }

private:
    std::vector<Tensor> adjoints_;
};

/**
 * Append-only operation record for reverse-mode differentiation.
 *
 * Node ids follow insertion order, so parents always precede children and the
 * backward sweep is a single pass over decreasing ids. A tape belongs to one
 * thread.
 */
class Tape {
public:
    struct Node {
        OpKind kind = OpKind::Constant;
        std::array<int, 2> parents{-1, -1};
        double a = 0.0;  // op constant: scalar operand, exponent, clamp lo, slice offset
        double b = 0.0;  // clamp hi
        bool requires_grad = false;
        Tensor value;
    };

    Tape();
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    /// Differentiable input (network weight, parameter).
    Variable leaf(Tensor value);
    /// Non-differentiable input (data).
    Variable constant(Tensor value);

    /// Append an operation node. All inputs must live on this tape.
    Variable record(OpKind kind, std::initializer_list<Variable> inputs, Tensor value, double a = 0.0,
                    double b = 0.0);

    /// Reverse accumulation from a 1x1 output; the output's adjoint is 1.
    Gradients backward(const Variable& output) const;

    std::size_t size() const { return nodes_.size(); }
    const Node& node(int id) const { return nodes_.at(static_cast<std::size_t>(id)); }
    Variable handle(int id);

    /// When set, every recorded value is checked for NaN/Inf. On by default
    /// in debug builds.
    void set_check_finite(bool on) { check_finite_ = on; }
    bool check_finite() const { return check_finite_; }

    /// Node id the next recorded operation will receive.
    long next_id() const { return static_cast<long>(nodes_.size()); }

private:
    Variable push(Node node);

    std::deque<Node> nodes_;
    bool check_finite_;
};

// ---------------------------------------------------------------------------
// Differentiable operations. Mixed overloads lift Tensor operands to tape
// constants.
// ---------------------------------------------------------------------------

Variable operator+(const Variable& a, const Variable& b);
Variable operator-(const Variable& a, const Variable& b);
Variable operator*(const Variable& a, const Variable& b);
Variable operator/(const Variable& a, const Variable& b);
Variable operator+(const Variable& a, const Tensor& b);
Variable operator+(const Tensor& a, const Variable& b);
Variable operator-(const Variable& a, const Tensor& b);
Variable operator-(const Tensor& a, const Variable& b);
Variable operator*(const Variable& a, const Tensor& b);
Variable operator*(const Tensor& a, const Variable& b);
Variable operator/(const Variable& a, const Tensor& b);
Variable operator/(const Tensor& a, const Variable& b);
Variable operator-(const Variable& a);
Variable operator+(const Variable& a, double b);
Variable operator+(double a, const Variable& b);
Variable operator-(const Variable& a, double b);
Variable operator-(double a, const Variable& b);
Variable operator*(const Variable& a, double b);
Variable operator*(double a, const Variable& b);
Variable operator/(const Variable& a, double b);
Variable operator/(double a, const Variable& b);

/// Gradient goes to the first argument at ties.
Variable min(const Variable& a, const Variable& b);
Variable max(const Variable& a, const Variable& b);
Variable min(const Variable& a, const Tensor& b);
Variable max(const Variable& a, const Tensor& b);
Variable min(const Tensor& a, const Variable& b);
Variable max(const Tensor& a, const Variable& b);
Variable min(const Variable& a, double b);
Variable max(const Variable& a, double b);
/// Gradient passes only strictly inside (lo, hi).
Variable clamp(const Variable& x, double lo, double hi);

Variable exp(const Variable& x);
Variable log(const Variable& x);
Variable log10(const Variable& x);
Variable sqrt(const Variable& x);
Variable abs(const Variable& x);
Variable sigmoid(const Variable& x);
Variable tanh(const Variable& x);
/// relu'(0) = 0
Variable relu(const Variable& x);
/// Derivative is the digamma function.
Variable lgamma(const Variable& x);
Variable pow(const Variable& base, double exponent);
/// exp(exponent * log(max(base, 1e-8)))
Variable pow(const Variable& base, const Variable& exponent);
Variable pow(const Tensor& base, const Variable& exponent);
Variable pow(const Variable& base, const Tensor& exponent);

Variable matmul(const Variable& a, const Variable& b);
Variable matmul(const Tensor& a, const Variable& b);
Variable matmul(const Variable& a, const Tensor& b);
Variable transpose(const Variable& a);
Variable slice_cols(const Variable& a, std::size_t begin, std::size_t count);
Variable concat_cols(const Variable& a, const Variable& b);
Variable concat_cols(const Variable& a, const Tensor& b);
Variable concat_cols(const Tensor& a, const Variable& b);
Variable sum(const Variable& a);
Variable mean(const Variable& a);

}  // namespace dhbv::ad
