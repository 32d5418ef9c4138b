#pragma once

#include "dhbv/autodiff/tape.hpp"

#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

namespace dhbv::routing {

using ad::Tensor;

inline constexpr std::size_t kDefaultMaxLag = 15;

/// Causal kernel: weights[i] applies to runoff i days earlier. Sums to 1.
struct UnitHydrograph {
    std::vector<double> weights;
};

/**
 * Gamma unit hydrograph, batched. `shape` and `scale` are [B x 1]; returns
 * one [B x 1] weight per lag. Each lag takes the gamma density at its
 * midpoint (i + 0.5 days); the kernel is then renormalised to unit sum.
 */
template <class T>
std::vector<T> gamma_kernel(const T& shape, const T& scale, std::size_t max_lag) {
    if (max_lag == 0) throw std::invalid_argument("gamma_kernel: max_lag must be >= 1");
    for (double v : ad::value_of(shape).values())
        if (!(v > 0.0)) throw std::invalid_argument("gamma_kernel: shape parameter must be positive");
    for (double v : ad::value_of(scale).values())
        if (!(v > 0.0)) throw std::invalid_argument("gamma_kernel: scale parameter must be positive");

    // log density: -lgamma(a) - a log(tau) + (a - 1) log(t) - t / tau
    const T log_norm = lgamma(shape) + shape * log(scale);
    const T inv_scale = 1.0 / scale;
    std::vector<T> w;
    w.reserve(max_lag);
    for (std::size_t i = 0; i < max_lag; ++i) {
        const double t = static_cast<double>(i) + 0.5;
        w.push_back(exp((shape - 1.0) * std::log(t) - inv_scale * t - log_norm));
    }
    T total = w[0];
    for (std::size_t i = 1; i < max_lag; ++i) total = total + w[i];
    for (auto& x : w) x = x / total;
    return w;
}

/// Single-basin kernel.
UnitHydrograph gamma_uh(double shape, double scale, std::size_t max_lag = kDefaultMaxLag);

/**
 * routed[t] = sum_{i=0}^{min(t, K-1)} kernel[i] * runoff[t - i] for
 * t in [begin, runoff.size()). History before day 0 is zero.
 */
template <class T, class R>
std::vector<T> route_batch(const std::vector<R>& runoff, const std::vector<T>& kernel, std::size_t begin = 0) {
    std::vector<T> out;
    out.reserve(runoff.size() > begin ? runoff.size() - begin : 0);
    for (std::size_t t = begin; t < runoff.size(); ++t) {
        const std::size_t lags = std::min(t + 1, kernel.size());
        T acc = kernel[0] * runoff[t];
        for (std::size_t i = 1; i < lags; ++i) acc = acc + kernel[i] * runoff[t - i];
        out.push_back(std::move(acc));
    }
    return out;
}

/// Single-basin convolution over the whole series.
std::vector<double> route(std::span<const double> runoff, const UnitHydrograph& uh);

}  // namespace dhbv::routing
