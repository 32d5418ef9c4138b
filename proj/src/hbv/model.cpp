#include "dhbv/hbv/model.hpp"

#include <algorithm>
#include <cmath>

namespace dhbv::hbv {

std::pair<Tensor, Tensor> partition_precip(const Tensor& precip, const Tensor& temp, const Tensor& threshold) {
    Tensor snowfall = precip * ad::less_mask(temp, threshold);
    Tensor rainfall = precip - snowfall;
    return {std::move(snowfall), std::move(rainfall)};
}

State<Tensor> initial_state(const HbvParams<Tensor>& p) {
    const Tensor& fc = p[Param::FC];
    const std::size_t n = fc.rows();
    return {Tensor(n, 1, 0.0), Tensor(n, 1, 0.0), fc * 0.5, Tensor(n, 1, 0.0), Tensor(n, 1, 10.0)};
}

Simulation hbv_simulate(const std::vector<DayForcing>& forcing, const HbvParams<Tensor>& params,
                        const DynamicParams<Tensor>& dynamic, Variant variant, std::size_t warmup_days,
                        const nn::BoundNnr<Tensor>* nnr, const std::optional<State<Tensor>>& initial) {
    const std::size_t n = forcing.size();
    if (n == 0 || n <= warmup_days) {
        throw std::invalid_argument("hbv_simulate: need more days (" + std::to_string(n) + ") than warm-up (" +
                                    std::to_string(warmup_days) + ")");
    }
    auto check_len = [&](const std::vector<Tensor>& s, const char* what) {
        if (!s.empty() && s.size() != n) {
            throw std::invalid_argument(std::string("hbv_simulate: dynamic ") + what + " series has " +
                                        std::to_string(s.size()) + " days, forcing has " + std::to_string(n));
        }
    };
    check_len(dynamic.beta, "beta");
    check_len(dynamic.gamma, "gamma");
    const auto kinds = dynamic_kinds(variant);
    for (auto k : kinds) {
        const auto& s = k == nn::DynamicKind::Beta ? dynamic.beta : dynamic.gamma;
        if (s.empty()) throw std::invalid_argument("hbv_simulate: variant requires a dynamic parameter series");
    }
    Simulation sim;
    sim.warmup_days = warmup_days;
    sim.rollout = run_hbv(initial ? *initial : initial_state(params), forcing, 0, n, params, dynamic, variant, nnr);
    return sim;
}

Tensor total_storage(const State<Tensor>& s) { return s.snow + s.liquid + s.soil + s.upper + s.lower; }

double mass_residual(const State<Tensor>& before, const State<Tensor>& after, const DayForcing& day,
                     const Fluxes<Tensor>& f) {
    const Tensor r = (total_storage(after) - total_storage(before)) - (day.precip - f.et - f.q);
    double worst = 0.0;
    for (double v : r.values()) worst = std::max(worst, std::abs(v));
    return worst;
}

}  // namespace dhbv::hbv
