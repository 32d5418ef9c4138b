#pragma once

#include "dhbv/autodiff/tape.hpp"
#include "dhbv/error.hpp"

#include <cmath>
#include <string>
#include <vector>

namespace dhbv::train {

using ad::Tensor;
using ad::Variable;

/// Simulated flow is floored here before the square root of the flow transform.
inline constexpr double kSimFloor = 1e-8;
/// Mean squared errors are floored here before the outer square root.
inline constexpr double kMseFloor = 1e-30;

/// Observed flow per day ([B x 1] each) with missing entries zeroed and masked out.
struct Target {
    std::vector<Tensor> obs;
    std::vector<Tensor> obs_hat;  // flow_transform(obs), zero where masked
    std::vector<Tensor> mask;     // 1 where observed
    std::size_t valid = 0;

    std::size_t days() const { return obs.size(); }
};

/// Builds a target from per-day observations where NaN marks a gap.
/// `transform` = false skips obs_hat (for targets that may be negative).
Target make_target(const std::vector<Tensor>& observed, bool transform = true);

template <class T>
struct LossTerms {
    T total;
    double plain = 0.0;        // pooled RMSE of flow
    double transformed = 0.0;  // pooled RMSE of flow_transform(flow)
};

namespace detail {

inline void check_shapes(std::size_t days, const Target& target) {
    if (days != target.days()) {
        throw std::invalid_argument("loss: " + std::to_string(days) + " simulated days vs " +
                                    std::to_string(target.days()) + " observed");
    }
    if (target.valid == 0) throw DataError("loss: no valid observations in the batch");
}

template <class T>
T masked_sum_sq(const std::vector<T>& sim, const std::vector<Tensor>& obs, const std::vector<Tensor>& mask) {
    T acc;
    for (std::size_t t = 0; t < sim.size(); ++t) {
        if (!ad::value_of(sim[t]).same_shape(obs[t])) {
            throw std::invalid_argument("loss: shape mismatch on day " + std::to_string(t) + " (" +
                                        ad::value_of(sim[t]).shape_string() + " vs " + obs[t].shape_string() + ")");
        }
        const T diff = (sim[t] - obs[t]) * mask[t];
        T term = sum(diff * diff);
        acc = t == 0 ? std::move(term) : acc + term;
    }
    return acc;
}

}  // namespace detail

/**
 * Masked pooled composite loss over all basin-days:
 *
 *   (1 - alpha) * sqrt(sum (Qs - Qo)^2 / n) + alpha * sqrt(sum (Qs^ - Qo^)^2 / n)
 *
 * with Q^ = log10(sqrt(Q) + 0.1) and n the number of observed entries.
 * Differentiable with respect to `sim` (one [B x 1] per day).
 */
template <class T>
LossTerms<T> compute_loss(const std::vector<T>& sim, const Target& target, double alpha) {
    detail::check_shapes(sim.size(), target);
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw ConfigError("loss: alpha must lie in [0, 1]");
    if (target.obs_hat.size() != target.days()) throw std::invalid_argument("loss: target lacks transformed flow");
    const double n = static_cast<double>(target.valid);

    std::vector<T> sim_hat;
    sim_hat.reserve(sim.size());
    for (const auto& s : sim) sim_hat.push_back(log10(sqrt(max(s, kSimFloor)) + 0.1));

    const T plain = sqrt(max(detail::masked_sum_sq(sim, target.obs, target.mask) / n, kMseFloor));
    const T transformed = sqrt(max(detail::masked_sum_sq(sim_hat, target.obs_hat, target.mask) / n, kMseFloor));
    LossTerms<T> out;
    out.plain = ad::value_of(plain).item();
    out.transformed = ad::value_of(transformed).item();
    out.total = plain * (1.0 - alpha) + transformed * alpha;
    return out;
}

/// Masked pooled RMSE (the benchmark LSTM's loss on normalized targets).
template <class T>
T masked_rmse(const std::vector<T>& sim, const Target& target) {
    detail::check_shapes(sim.size(), target);
    const double n = static_cast<double>(target.valid);
    return sqrt(max(detail::masked_sum_sq(sim, target.obs, target.mask) / n, kMseFloor));
}

}  // namespace dhbv::train
