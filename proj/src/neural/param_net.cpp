#include "dhbv/neural/param_net.hpp"

namespace dhbv::nn {

void ParamNetConfig::validate() const {
    if (hidden == 0) throw std::invalid_argument("ParamNetConfig: hidden must be positive");
    if (output_dim() == 0) throw std::invalid_argument("ParamNetConfig: no outputs");
    if (input_dim() == 0) throw std::invalid_argument("ParamNetConfig: no inputs");
}

ParamNet ParamNet::init(const ParamNetConfig& config, std::uint64_t seed) {
    config.validate();
    std::mt19937_64 rng(seed);
    ParamNet net;
    net.config = config;
    net.lstm = LstmParams::init(config.input_dim(), config.hidden, rng);
    net.head = LinearLayer::init(config.hidden, config.output_dim(), rng);
    return net;
}

ParameterList ParamNet::parameters() {
    ParameterList out;
    lstm.append_parameters("param_net.lstm", out);
    head.append_parameters("param_net.head", out);
    return out;
}

std::vector<Tensor> assemble_inputs(const std::vector<Tensor>& forcings, const Tensor& attributes) {
    std::vector<Tensor> out;
    out.reserve(forcings.size());
    for (const auto& x : forcings) out.push_back(ad::concat_cols(x, attributes));
    return out;
}

std::pair<Tensor, Tensor> param_net_forward(const ParamNet& net, const Tensor& attributes, const Tensor& x_seq) {
    if (attributes.size() != net.config.attribute_dim) {
        throw std::invalid_argument("param_net_forward: attribute vector has wrong length");
    }
    const Tensor attr_row(1, attributes.size(), attributes.storage());
    std::vector<Tensor> steps;
    steps.reserve(x_seq.rows());
    for (std::size_t t = 0; t < x_seq.rows(); ++t) {
        Tensor row(1, x_seq.cols());
        for (std::size_t j = 0; j < x_seq.cols(); ++j) row(0, j) = x_seq(t, j);
        steps.push_back(ad::concat_cols(row, attr_row));
    }
    ValueBinder b;
    auto out = param_net_forward(net, steps, b);
    const std::size_t m = net.config.dynamic_kinds.size();
    Tensor dyn(x_seq.rows(), m);
    for (std::size_t t = 0; t < out.dynamic_unit.size(); ++t)
        for (std::size_t j = 0; j < m; ++j) dyn(t, j) = out.dynamic_unit[t](0, j);
    return {out.static_unit, dyn};
}

NnrNet NnrNet::init(const NnrConfig& config, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    NnrNet net;
    net.config = config;
    std::size_t in = NnrConfig::kInputDim;
    for (std::size_t h : config.hidden) {
        net.layers.push_back(LinearLayer::init(in, h, rng));
        in = h;
    }
    net.layers.push_back(LinearLayer::init(in, 1, rng));
    return net;
}

ParameterList NnrNet::parameters() {
    ParameterList out;
    for (std::size_t i = 0; i < layers.size(); ++i) layers[i].append_parameters("nnr.layer" + std::to_string(i), out);
    return out;
}

}  // namespace dhbv::nn
