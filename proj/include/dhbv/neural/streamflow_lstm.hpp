#pragma once

#include "dhbv/neural/layers.hpp"

#include <cstdint>
#include <vector>

namespace dhbv::nn {

/// Purely data-driven benchmark: forcings + attributes -> normalized transformed flow.
struct StreamflowLstm {
    LstmParams lstm;
    LinearLayer head;  // hidden -> 1

    static StreamflowLstm init(std::size_t input, std::size_t hidden, std::uint64_t seed);
    ParameterList parameters();
};

/// One [B x 1] prediction per step of `inputs` (each [B x I]).
template <class Binder>
std::vector<typename Binder::value_type> lstm_streamflow_forward(const StreamflowLstm& net,
                                                                 const std::vector<Tensor>& inputs, Binder& b) {
    using T = typename Binder::value_type;
    for (const auto& x : inputs) {
        if (!x.all_finite()) throw std::invalid_argument("lstm_streamflow_forward: non-finite input");
    }
    const auto lstm = bind_lstm(net.lstm, b);
    const auto head = bind_linear(net.head, b);
    const auto hidden = lstm_sequence(lstm, inputs, b);
    std::vector<T> out;
    out.reserve(hidden.size());
    for (const auto& h : hidden) out.push_back(linear_forward(head, h));
    return out;
}

/// Single-sequence convenience: x_seq [T x I] -> [T x 1].
Tensor lstm_streamflow_forward(const StreamflowLstm& net, const Tensor& x_seq);

}  // namespace dhbv::nn
