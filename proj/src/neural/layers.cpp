#include "dhbv/neural/layers.hpp"

#include <cmath>

namespace dhbv::nn {

namespace {

Tensor uniform(std::size_t rows, std::size_t cols, double bound, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> dist(-bound, bound);
    Tensor t(rows, cols);
    for (auto& v : t.values()) v = dist(rng);
    return t;
}

}  // namespace

LinearLayer LinearLayer::init(std::size_t in, std::size_t out, std::mt19937_64& rng) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    LinearLayer l;
    l.weight = uniform(out, in, bound, rng);
    l.bias = uniform(1, out, bound, rng);
    return l;
}

void LinearLayer::append_parameters(const std::string& prefix, ParameterList& out) {
    out.emplace_back(prefix + ".weight", &weight);
    out.emplace_back(prefix + ".bias", &bias);
}

LstmParams LstmParams::init(std::size_t input, std::size_t hidden, std::mt19937_64& rng) {
    LstmParams p;
    p.w_ih = uniform(4 * hidden, input, 1.0 / std::sqrt(static_cast<double>(input)), rng);
    p.w_hh = uniform(4 * hidden, hidden, 1.0 / std::sqrt(static_cast<double>(hidden)), rng);
    p.bias = uniform(1, 4 * hidden, 1.0 / std::sqrt(static_cast<double>(hidden)), rng);
    return p;
}

LstmParams LstmParams::zeros(std::size_t input, std::size_t hidden) {
    return {Tensor(4 * hidden, input, 0.0), Tensor(4 * hidden, hidden, 0.0), Tensor(1, 4 * hidden, 0.0)};
}

void LstmParams::append_parameters(const std::string& prefix, ParameterList& out) {
    out.emplace_back(prefix + ".w_ih", &w_ih);
    out.emplace_back(prefix + ".w_hh", &w_hh);
    out.emplace_back(prefix + ".bias", &bias);
}

Variable TapeBinder::operator()(const Tensor& w) {
    auto it = leaves_.find(&w);
    if (it != leaves_.end()) return it->second;
    Variable v = tape_->leaf(w);
    leaves_.emplace(&w, v);
    return v;
}

const Variable* TapeBinder::find(const Tensor& w) const {
    auto it = leaves_.find(&w);
    return it == leaves_.end() ? nullptr : &it->second;
}

std::vector<Tensor> collect_gradients(const ParameterList& params, const TapeBinder& binder,
                                      const ad::Gradients& grads) {
    std::vector<Tensor> out;
    out.reserve(params.size());
    for (const auto& [name, t] : params) {
        const Variable* v = binder.find(*t);
        out.push_back(v ? grads.wrt(*v) : Tensor(t->rows(), t->cols(), 0.0));
    }
    return out;
}

Tensor lstm_forward(const LstmParams& params, const Tensor& x_seq, const Tensor& h0, const Tensor& c0) {
    if (x_seq.rows() == 0) throw std::invalid_argument("lstm_forward: empty sequence");
    ValueBinder b;
    const auto bound = bind_lstm(params, b);
    const std::size_t H = params.hidden();
    auto as_row = [](const Tensor& v) { return Tensor(1, v.size(), v.storage()); };
    Tensor h = as_row(h0), c = as_row(c0);
    Tensor out(x_seq.rows(), H);
    for (std::size_t t = 0; t < x_seq.rows(); ++t) {
        Tensor x(1, x_seq.cols());
        for (std::size_t j = 0; j < x_seq.cols(); ++j) x(0, j) = x_seq(t, j);
        auto next = lstm_step(bound, x, h, c);
        h = std::move(next.h);
        c = std::move(next.c);
        for (std::size_t j = 0; j < H; ++j) out(t, j) = h(0, j);
    }
    return out;
}

LstmState<Tensor> lstm_step(const LstmParams& params, const Tensor& x, const Tensor& h, const Tensor& c) {
    ValueBinder b;
    return lstm_step(bind_lstm(params, b), x, h, c);
}

}  // namespace dhbv::nn
