#include "dhbv/neural/streamflow_lstm.hpp"

namespace dhbv::nn {

StreamflowLstm StreamflowLstm::init(std::size_t input, std::size_t hidden, std::uint64_t seed) {
    if (input == 0 || hidden == 0) throw std::invalid_argument("StreamflowLstm: sizes must be positive");
    std::mt19937_64 rng(seed);
    StreamflowLstm net;
    net.lstm = LstmParams::init(input, hidden, rng);
    net.head = LinearLayer::init(hidden, 1, rng);
    return net;
}

ParameterList StreamflowLstm::parameters() {
    ParameterList out;
    lstm.append_parameters("streamflow.lstm", out);
    head.append_parameters("streamflow.head", out);
    return out;
}

Tensor lstm_streamflow_forward(const StreamflowLstm& net, const Tensor& x_seq) {
    std::vector<Tensor> steps;
    steps.reserve(x_seq.rows());
    for (std::size_t t = 0; t < x_seq.rows(); ++t) steps.push_back(ad::slice_rows(x_seq, t, 1));
    ValueBinder b;
    const auto y = lstm_streamflow_forward(net, steps, b);
    Tensor out(y.size(), 1);
    for (std::size_t t = 0; t < y.size(); ++t) out(t, 0) = y[t].item();
    return out;
}

}  // namespace dhbv::nn
