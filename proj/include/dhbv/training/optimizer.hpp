#pragma once

#include "dhbv/neural/layers.hpp"
#include "dhbv/training/config.hpp"

#include <json.hpp>

#include <cstdint>
#include <vector>

namespace dhbv::train {

using ad::Tensor;

struct OptimizerSettings {
    OptimizerKind kind = OptimizerKind::Adam;
    double learning_rate = 1e-3;
    double beta1 = 0.9;    // Adam
    double beta2 = 0.999;  // Adam
    double epsilon = 1e-8;  // Adam
    double rho = 0.9;       // Adadelta
    double adadelta_epsilon = 1e-6;
};

/// Throws NumericsError naming the first parameter with a non-finite gradient.
void check_gradients(const nn::ParameterList& params, const std::vector<Tensor>& grads);

/// Scales `grads` in place so their global L2 norm is at most `max_norm`; returns the norm before scaling.
double clip_global_norm(std::vector<Tensor>& grads, double max_norm);

/**
 * First-order optimizer over a fixed parameter list. State slots follow the
 * list order, so the list must not change between steps.
 */
class Optimizer {
public:
    explicit Optimizer(OptimizerSettings settings = {});

    /// Validates gradients, then updates every parameter in place.
    void step(const nn::ParameterList& params, const std::vector<Tensor>& grads);

    const OptimizerSettings& settings() const { return settings_; }
    std::uint64_t steps() const { return steps_; }

    nlohmann::json state_json() const;
    /// Restores state written by state_json; shapes must match `params`.
    void load_state(const nlohmann::json& j, const nn::ParameterList& params);

private:
    void ensure_slots(const nn::ParameterList& params);

    OptimizerSettings settings_;
    std::uint64_t steps_ = 0;
    std::vector<Tensor> first_;   // Adam m, Adadelta E[g^2]
    std::vector<Tensor> second_;  // Adam v, Adadelta E[dx^2]
};

}  // namespace dhbv::train
