#pragma once

#include "dhbv/neural/layers.hpp"

#include <array>
#include <cstdint>
#include <vector>

namespace dhbv::nn {

/// Parameters g_A may emit per day instead of once per basin.
enum class DynamicKind : std::uint8_t { Beta, Gamma };

struct ParamNetConfig {
    std::size_t attribute_dim = 35;
    std::size_t forcing_dim = 3;
    std::size_t hidden = 256;
    std::size_t static_param_count = 0;
    std::vector<DynamicKind> dynamic_kinds;

    std::size_t input_dim() const { return forcing_dim + attribute_dim; }
    std::size_t output_dim() const { return static_param_count + dynamic_kinds.size(); }
    void validate() const;
};

/// g_A: an LSTM over [forcing_t || attributes] with a sigmoid head.
struct ParamNet {
    ParamNetConfig config;
    LstmParams lstm;
    LinearLayer head;

    static ParamNet init(const ParamNetConfig& config, std::uint64_t seed);
    ParameterList parameters();
};

template <class T>
struct ParamNetOutput {
    T static_unit;                // [B x static_param_count], from the final step
    std::vector<T> dynamic_unit;  // per day [B x |dynamic_kinds|]; empty when none
};

/// Per-day network inputs [B x (forcing_dim + attribute_dim)].
std::vector<Tensor> assemble_inputs(const std::vector<Tensor>& forcings, const Tensor& attributes);

/**
 * Forward pass of g_A over a batch. Outputs are in (0, 1); mapping onto
 * physical ranges happens in the hbv module.
 */
template <class Binder>
ParamNetOutput<typename Binder::value_type> param_net_forward(const ParamNet& net,
                                                              const std::vector<Tensor>& inputs, Binder& b) {
    using T = typename Binder::value_type;
    for (const auto& x : inputs) {
        if (x.cols() != net.config.input_dim()) {
            throw std::invalid_argument("param_net_forward: expected " +
                                        std::to_string(net.config.input_dim()) + " input columns, got " +
                                        std::to_string(x.cols()));
        }
        if (!x.all_finite()) throw std::invalid_argument("param_net_forward: non-finite input");
    }
    const auto lstm = bind_lstm(net.lstm, b);
    const auto head = bind_linear(net.head, b);
    const auto hidden = lstm_sequence(lstm, inputs, b);

    const std::size_t k = net.config.static_param_count;
    const std::size_t m = net.config.dynamic_kinds.size();
    ParamNetOutput<T> out;
    if (m > 0) {
        out.dynamic_unit.reserve(hidden.size());
        for (std::size_t t = 0; t < hidden.size(); ++t) {
            const T y = sigmoid(linear_forward(head, hidden[t]));
            out.dynamic_unit.push_back(slice_cols(y, k, m));
            if (t + 1 == hidden.size()) out.static_unit = slice_cols(y, 0, k);
        }
    } else {
        out.static_unit = sigmoid(linear_forward(head, hidden.back()));
    }
    return out;
}

/// Single-basin convenience: attributes [35], x_seq [T x 3] ->
/// static [1 x k] and dynamic [T x m].
std::pair<Tensor, Tensor> param_net_forward(const ParamNet& net, const Tensor& attributes, const Tensor& x_seq);

// ---------------------------------------------------------------------------
// NN_r: replaces the effective-rainfall curve.
// ---------------------------------------------------------------------------

struct NnrConfig {
    static constexpr std::size_t kInputDim = 5;
    std::vector<std::size_t> hidden{16, 16};
    /// Fixed feature scaling for (theta_FC, beta, S_s, S_s/theta_FC, water_in).
    std::array<double, kInputDim> input_scale{1e-3, 1.0 / 6.0, 1e-3, 1.0, 0.05};
};

struct NnrNet {
    NnrConfig config;
    std::vector<LinearLayer> layers;  // tanh between layers, sigmoid gate at the end

    static NnrNet init(const NnrConfig& config, std::uint64_t seed);
    ParameterList parameters();
};

template <class T>
struct BoundNnr {
    std::vector<BoundLinear<T>> layers;
    std::array<double, NnrConfig::kInputDim> input_scale{};
};

template <class Binder>
auto bind_nnr(const NnrNet& net, Binder& b) {
    BoundNnr<typename Binder::value_type> out;
    for (const auto& l : net.layers) out.layers.push_back(bind_linear(l, b));
    out.input_scale = net.config.input_scale;
    return out;
}

/**
 * P_eff = sigma(MLP(theta_FC, beta, S_s, S_s/theta_FC, water_in)) * water_in.
 * All arguments are [B x 1]. The gate keeps 0 <= P_eff <= water_in.
 */
template <class T, class A, class B, class C, class D, class E>
T nnr_forward(const BoundNnr<T>& net, const A& fc, const B& beta, const C& soil, const D& ratio,
              const E& water_in) {
    const auto& w = ad::value_of(water_in);
    for (double v : w.values()) {
        if (v < 0.0) throw std::invalid_argument("nnr_forward: negative water input");
    }
    const auto& s = net.input_scale;
    const auto features =
        concat_cols(concat_cols(concat_cols(concat_cols(fc * s[0], beta * s[1]), soil * s[2]), ratio * s[3]),
                    water_in * s[4]);
    if (net.layers.empty()) throw std::invalid_argument("nnr_forward: network has no layers");
    T x = linear_forward(net.layers[0], features);
    for (std::size_t i = 1; i < net.layers.size(); ++i) x = linear_forward(net.layers[i], tanh(x));
    const T gate = sigmoid(x);
    return gate * water_in;
}

}  // namespace dhbv::nn
