#include "dhbv/training/optimizer.hpp"

#include "dhbv/error.hpp"

#include <cmath>

namespace dhbv::train {

using json = nlohmann::json;

void check_gradients(const nn::ParameterList& params, const std::vector<Tensor>& grads) {
    if (grads.size() != params.size()) {
        throw std::invalid_argument("optimizer: " + std::to_string(grads.size()) + " gradients for " +
                                    std::to_string(params.size()) + " parameters");
    }
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (!grads[i].same_shape(*params[i].second)) {
            throw std::invalid_argument("optimizer: gradient shape " + grads[i].shape_string() + " for parameter " +
                                        params[i].first + " of shape " + params[i].second->shape_string());
        }
        if (!grads[i].all_finite()) throw NumericsError("non-finite gradient for parameter " + params[i].first);
    }
}

double clip_global_norm(std::vector<Tensor>& grads, double max_norm) {
    double sq = 0.0;
    for (const auto& g : grads)
        for (double v : g.values()) sq += v * v;
    const double norm = std::sqrt(sq);
    if (max_norm > 0.0 && norm > max_norm) {
        const double scale = max_norm / norm;
        for (auto& g : grads)
            for (double& v : g.values()) v *= scale;
    }
    return norm;
}

Optimizer::Optimizer(OptimizerSettings settings) : settings_(settings) {
    if (!(settings_.learning_rate > 0.0)) throw ConfigError("optimizer: learning rate must be positive");
}

void Optimizer::ensure_slots(const nn::ParameterList& params) {
    if (first_.empty()) {
        for (const auto& [name, p] : params) {
            first_.emplace_back(p->rows(), p->cols(), 0.0);
            second_.emplace_back(p->rows(), p->cols(), 0.0);
        }
    }
    if (first_.size() != params.size()) throw std::invalid_argument("optimizer: parameter list changed size");
}

void Optimizer::step(const nn::ParameterList& params, const std::vector<Tensor>& grads) {
    check_gradients(params, grads);
    ensure_slots(params);
    ++steps_;
    const auto& s = settings_;
    switch (s.kind) {
        case OptimizerKind::Sgd:
            for (std::size_t i = 0; i < params.size(); ++i) {
                auto w = params[i].second->values();
                const auto g = grads[i].values();
                for (std::size_t k = 0; k < w.size(); ++k) w[k] -= s.learning_rate * g[k];
            }
            break;
        case OptimizerKind::Adam: {
            const double t = static_cast<double>(steps_);
            const double c1 = 1.0 - std::pow(s.beta1, t);
            const double c2 = 1.0 - std::pow(s.beta2, t);
            for (std::size_t i = 0; i < params.size(); ++i) {
                auto w = params[i].second->values();
                auto m = first_[i].values();
                auto v = second_[i].values();
                const auto g = grads[i].values();
                for (std::size_t k = 0; k < w.size(); ++k) {
                    m[k] = s.beta1 * m[k] + (1.0 - s.beta1) * g[k];
                    v[k] = s.beta2 * v[k] + (1.0 - s.beta2) * g[k] * g[k];
                    w[k] -= s.learning_rate * (m[k] / c1) / (std::sqrt(v[k] / c2) + s.epsilon);
                }
            }
            break;
        }
        case OptimizerKind::Adadelta:
            for (std::size_t i = 0; i < params.size(); ++i) {
                auto w = params[i].second->values();
                auto eg = first_[i].values();
                auto ex = second_[i].values();
                const auto g = grads[i].values();
                for (std::size_t k = 0; k < w.size(); ++k) {
                    eg[k] = s.rho * eg[k] + (1.0 - s.rho) * g[k] * g[k];
                    const double dx =
                        std::sqrt(ex[k] + s.adadelta_epsilon) / std::sqrt(eg[k] + s.adadelta_epsilon) * g[k];
                    ex[k] = s.rho * ex[k] + (1.0 - s.rho) * dx * dx;
                    w[k] -= s.learning_rate * dx;
                }
            }
            break;
    }
}

namespace {

json tensor_json(const Tensor& t) {
    return json{{"rows", t.rows()}, {"cols", t.cols()}, {"data", std::vector<double>(t.values().begin(), t.values().end())}};
}

}  // namespace

json Optimizer::state_json() const {
    json j;
    j["kind"] = std::string(optimizer_name(settings_.kind));
    j["learning_rate"] = settings_.learning_rate;
    j["steps"] = steps_;
    j["first"] = json::array();
    j["second"] = json::array();
    for (const auto& t : first_) j["first"].push_back(tensor_json(t));
    for (const auto& t : second_) j["second"].push_back(tensor_json(t));
    return j;
}

void Optimizer::load_state(const json& j, const nn::ParameterList& params) {
    try {
        if (parse_optimizer(j.at("kind").get<std::string>()) != settings_.kind) {
            throw ConfigError("checkpoint optimizer '" + j.at("kind").get<std::string>() + "' differs from the configured '" +
                              std::string(optimizer_name(settings_.kind)) + "'");
        }
        steps_ = j.at("steps").get<std::uint64_t>();
        first_.clear();
        second_.clear();
        const auto& f = j.at("first");
        const auto& s = j.at("second");
        if (f.empty() && s.empty()) return;
        if (f.size() != params.size() || s.size() != params.size()) {
            throw ConfigError("checkpoint optimizer state does not match the model parameters");
        }
        auto load = [&](const json& e, std::size_t i) {
            Tensor t(e.at("rows").get<std::size_t>(), e.at("cols").get<std::size_t>(),
                     e.at("data").get<std::vector<double>>());
            if (!t.same_shape(*params[i].second)) {
                throw ConfigError("checkpoint optimizer state shape mismatch for " + params[i].first);
            }
            return t;
        };
        for (std::size_t i = 0; i < params.size(); ++i) {
            first_.push_back(load(f[i], i));
            second_.push_back(load(s[i], i));
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("malformed optimizer state: ") + e.what());
    }
}

}  // namespace dhbv::train
