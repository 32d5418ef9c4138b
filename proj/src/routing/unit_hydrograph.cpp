#include "dhbv/routing/unit_hydrograph.hpp"

namespace dhbv::routing {

UnitHydrograph gamma_uh(double shape, double scale, std::size_t max_lag) {
    const auto w = gamma_kernel(Tensor::scalar(shape), Tensor::scalar(scale), max_lag);
    UnitHydrograph uh;
    uh.weights.reserve(w.size());
    for (const auto& x : w) uh.weights.push_back(x.item());
    return uh;
}

std::vector<double> route(std::span<const double> runoff, const UnitHydrograph& uh) {
    if (uh.weights.empty()) throw std::invalid_argument("route: empty unit hydrograph");
    std::vector<double> out(runoff.size(), 0.0);
    for (std::size_t t = 0; t < runoff.size(); ++t) {
        const std::size_t lags = std::min(t + 1, uh.weights.size());
        double acc = 0.0;
        for (std::size_t i = 0; i < lags; ++i) acc += uh.weights[i] * runoff[t - i];
        out[t] = acc;
    }
    return out;
}

}  // namespace dhbv::routing
