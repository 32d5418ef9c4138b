#pragma once

#include "dhbv/autodiff/tape.hpp"

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace dhbv::nn {

using ad::Tensor;
using ad::Variable;

/// Named references to trainable tensors, in a fixed order.
using ParameterList = std::vector<std::pair<std::string, Tensor*>>;

/// Fully connected layer y = x W^T + b.
struct LinearLayer {
    Tensor weight;  // [out x in]
    Tensor bias;    // [1 x out]

    std::size_t in() const { return weight.cols(); }
    std::size_t out() const { return weight.rows(); }

    /// Uniform(-1/sqrt(in), 1/sqrt(in)) for weights and bias.
    static LinearLayer init(std::size_t in, std::size_t out, std::mt19937_64& rng);
    void append_parameters(const std::string& prefix, ParameterList& out);
};

/// LSTM weights with gate blocks stacked as (input, forget, cell, output).
struct LstmParams {
    Tensor w_ih;  // [4H x I]
    Tensor w_hh;  // [4H x H]
    Tensor bias;  // [1 x 4H]

    std::size_t hidden() const { return w_hh.cols(); }
    std::size_t input() const { return w_ih.cols(); }

    static LstmParams init(std::size_t input, std::size_t hidden, std::mt19937_64& rng);
    static LstmParams zeros(std::size_t input, std::size_t hidden);
    void append_parameters(const std::string& prefix, ParameterList& out);
};

// ---------------------------------------------------------------------------
// Binding: the same forward code runs on plain tensors (inference, warm-up)
// or on tape variables (training). A binder turns stored weights into the
// working type.
// ---------------------------------------------------------------------------

/// Weights used as plain values; nothing is recorded.
struct ValueBinder {
    using value_type = Tensor;
    const Tensor& operator()(const Tensor& w) const { return w; }
    Tensor constant(Tensor t) const { return t; }
};

/// Registers each weight once as a tape leaf and remembers the handle.
class TapeBinder {
public:
    using value_type = Variable;
    explicit TapeBinder(ad::Tape& tape) : tape_(&tape) {}

    Variable operator()(const Tensor& w);
    Variable constant(Tensor t) { return tape_->constant(std::move(t)); }
    ad::Tape& tape() { return *tape_; }

    /// Leaf bound to `w`, if any.
    const Variable* find(const Tensor& w) const;

private:
    ad::Tape* tape_;
    std::unordered_map<const Tensor*, Variable> leaves_;
};

/// Gradient for every parameter in `params` (zero when unbound or unreached).
std::vector<Tensor> collect_gradients(const ParameterList& params, const TapeBinder& binder,
                                      const ad::Gradients& grads);

template <class T>
struct BoundLinear {
    T weight_t;  // [in x out]
    T bias;      // [1 x out]
};

template <class T>
struct BoundLstm {
    T w_ih_t;  // [I x 4H]
    T w_hh_t;  // [H x 4H]
    T bias;    // [1 x 4H]
    std::size_t input = 0;
    std::size_t hidden = 0;
};

template <class Binder>
auto bind_linear(const LinearLayer& l, Binder& b) {
    using T = typename Binder::value_type;
    return BoundLinear<T>{transpose(T(b(l.weight))), T(b(l.bias))};
}

template <class Binder>
auto bind_lstm(const LstmParams& p, Binder& b) {
    using T = typename Binder::value_type;
    return BoundLstm<T>{transpose(T(b(p.w_ih))), transpose(T(b(p.w_hh))), T(b(p.bias)), p.input(),
                        p.hidden()};
}

template <class T, class X>
T linear_forward(const BoundLinear<T>& l, const X& x) {
    return matmul(x, l.weight_t) + l.bias;
}

template <class T>
struct LstmState {
    T h;  // [B x H]
    T c;  // [B x H]
};

/**
 * One LSTM cell update over a batch of rows.
 *
 *   i = sigma(.), f = sigma(.), g = tanh(.), o = sigma(.)
 *   c' = f * c + i * g,  h' = o * tanh(c')
 */
template <class T, class X>
LstmState<T> lstm_step(const BoundLstm<T>& p, const X& x, const T& h, const T& c) {
    const std::size_t H = p.hidden;
    const auto& xv = ad::value_of(x);
    const auto& hv = ad::value_of(h);
    const auto& cv = ad::value_of(c);
    if (xv.cols() != p.input || hv.cols() != H || cv.cols() != H || hv.rows() != xv.rows() ||
        cv.rows() != xv.rows()) {
        throw std::invalid_argument("lstm_step: shape mismatch (x " + xv.shape_string() + ", h " +
                                    hv.shape_string() + ", c " + cv.shape_string() + ")");
    }
    const T gates = matmul(x, p.w_ih_t) + matmul(h, p.w_hh_t) + p.bias;
    const T i = sigmoid(slice_cols(gates, 0, H));
    const T f = sigmoid(slice_cols(gates, H, H));
    const T g = tanh(slice_cols(gates, 2 * H, H));
    const T o = sigmoid(slice_cols(gates, 3 * H, H));
    T c_next = f * c + i * g;
    T h_next = o * tanh(c_next);
    return {std::move(h_next), std::move(c_next)};
}

/// Runs the cell over `steps` (each [B x I]) from zero state; returns every h.
template <class Binder>
std::vector<typename Binder::value_type> lstm_sequence(const BoundLstm<typename Binder::value_type>& p,
                                                       const std::vector<Tensor>& steps, Binder& b) {
    using T = typename Binder::value_type;
    if (steps.empty()) throw std::invalid_argument("lstm_sequence: empty sequence");
    const std::size_t batch = steps.front().rows();
    T h = b.constant(Tensor(batch, p.hidden, 0.0));
    T c = b.constant(Tensor(batch, p.hidden, 0.0));
    std::vector<T> out;
    out.reserve(steps.size());
    for (const auto& x : steps) {
        auto next = lstm_step(p, x, h, c);
        h = std::move(next.h);
        c = std::move(next.c);
        out.push_back(h);
    }
    return out;
}

/// Single-sequence convenience: x_seq [T x I] -> h_seq [T x H].
Tensor lstm_forward(const LstmParams& params, const Tensor& x_seq, const Tensor& h0, const Tensor& c0);

/// Single-step convenience on plain tensors.
LstmState<Tensor> lstm_step(const LstmParams& params, const Tensor& x, const Tensor& h, const Tensor& c);

}  // namespace dhbv::nn
