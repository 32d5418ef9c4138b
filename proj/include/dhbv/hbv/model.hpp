#pragma once

#include "dhbv/error.hpp"
#include "dhbv/hbv/params.hpp"

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace dhbv::hbv {

/// Storages in mm, each [B x 1].
template <class T>
struct State {
    T snow;    // S_p, solid snowpack
    T liquid;  // S_liq, liquid water held in the pack
    T soil;    // S_s
    T upper;   // S_uz
    T lower;   // S_lz
};

/// One day of meteorology, each [B x 1].
struct DayForcing {
    Tensor precip;  // mm/day
    Tensor temp;    // degC
    Tensor pet;     // mm/day
};

/// Daily fluxes in mm/day. Snow/rain partition is data-only.
template <class T>
struct Fluxes {
    Tensor snowfall;
    Tensor rainfall;
    T melt;
    T refreeze;
    T infiltration;    // I_snow
    T effective_rain;  // P_eff
    T excess;          // E_x
    T et;              // E_T
    T percolation;
    T q0;
    T q1;
    T q2;
    T q;
};

template <class T>
struct StepResult {
    State<T> state;
    Fluxes<T> fluxes;
};

/// Per-day overrides for parameters treated dynamically; null when static.
template <class T>
struct DayOverrides {
    const T* beta = nullptr;
    const T* gamma = nullptr;
};

namespace detail {

template <class T>
void require_finite(const T& v, const char* step) {
    if (!ad::value_of(v).all_finite()) {
        throw NumericsError(std::string("hbv_step: non-finite value in ") + step);
    }
}

}  // namespace detail

/// (snowfall, rainfall): all precipitation is snow when temp < TT.
std::pair<Tensor, Tensor> partition_precip(const Tensor& precip, const Tensor& temp, const Tensor& threshold);

template <class T>
struct SnowResult {
    State<T> state;
    T melt;
    T refreeze;
    T infiltration;
};

/// Accumulate snowfall, melt, refreeze, then release liquid above CWH * pack.
template <class T>
SnowResult<T> snow_step(const State<T>& s, const Tensor& snowfall, const Tensor& temp, const HbvParams<T>& p) {
    T pack = s.snow + snowfall;
    T melt = min(p[Param::DD] * relu(temp - p[Param::TT]), pack);
    pack = pack - melt;
    T liquid = s.liquid + melt;
    T refreeze = min(p[Param::RFZ] * p[Param::DD] * relu(p[Param::TT] - temp), liquid);
    pack = pack + refreeze;
    liquid = liquid - refreeze;
    T infiltration = relu(liquid - p[Param::CWH] * pack);
    liquid = liquid - infiltration;
    State<T> out = s;
    out.snow = std::move(pack);
    out.liquid = std::move(liquid);
    return {std::move(out), std::move(melt), std::move(refreeze), std::move(infiltration)};
}

template <class T>
struct SoilResult {
    State<T> state;
    T effective_rain;
    T excess;
    T et;
};

/**
 * Surface soil bucket. Order: effective rainfall from the wetness curve on
 * the incoming storage, then excess above field capacity, then ET on what
 * remains. Each withdrawal is capped by the running store.
 */
template <class T>
SoilResult<T> soil_step(const State<T>& s, const T& infiltration, const Tensor& rainfall, const Tensor& pet,
                        const HbvParams<T>& p, Variant variant, const DayOverrides<T>& overrides = {},
                        const nn::BoundNnr<T>* nnr = nullptr) {
    const T& fc = p[Param::FC];
    const T& beta = overrides.beta ? *overrides.beta : p[Param::Beta];
    T water_in = infiltration + rainfall;
    T soil = s.soil;
    const T ratio = soil / fc;

    T effective;
    if (uses_nnr(variant)) {
        if (!nnr) throw std::invalid_argument("soil_step: delta_nnr requires the NN_r network");
        effective = nn::nnr_forward(*nnr, fc, beta, soil, ratio, water_in);
    } else {
        const T wetness = min(pow(ratio, beta), 1.0);
        effective = wetness * water_in;
    }
    soil = soil + water_in - effective;
    T excess = relu(soil - fc);
    soil = soil - excess;

    const T demand_ratio = soil / (fc * p[Param::LP]);
    T efficiency;
    if (uses_gamma(variant)) {
        const T& gamma = overrides.gamma ? *overrides.gamma : p[Param::Gamma];
        efficiency = min(pow(demand_ratio, gamma), 1.0);
    } else {
        efficiency = min(demand_ratio, 1.0);
    }
    T et = min(efficiency * pet, soil);
    soil = soil - et;

    State<T> out = s;
    out.soil = std::move(soil);
    return {std::move(out), std::move(effective), std::move(excess), std::move(et)};
}

template <class T>
struct UpperZoneResult {
    State<T> state;
    T percolation;
    T q0;
    T q1;
};

/// Upper zone: add inflow, percolate, then fast flow, then stormflow from what remains.
template <class T>
UpperZoneResult<T> upper_zone_step(const State<T>& s, const T& effective_rain, const T& excess,
                                   const HbvParams<T>& p) {
    T upper = s.upper + effective_rain + excess;
    T perc = min(p[Param::Perc], upper);
    upper = upper - perc;
    T q0 = min(p[Param::K0] * relu(upper - p[Param::UZL]), upper);
    upper = upper - q0;
    T q1 = min(p[Param::K1] * upper, upper);
    upper = upper - q1;
    State<T> out = s;
    out.upper = std::move(upper);
    return {std::move(out), std::move(perc), std::move(q0), std::move(q1)};
}

template <class T>
struct LowerZoneResult {
    State<T> state;
    T q2;
};

/// Lower zone: add percolation, then release baseflow.
template <class T>
LowerZoneResult<T> lower_zone_step(const State<T>& s, const T& percolation, const HbvParams<T>& p) {
    T lower = s.lower + percolation;
    T q2 = min(p[Param::K2] * lower, lower);
    lower = lower - q2;
    State<T> out = s;
    out.lower = std::move(lower);
    return {std::move(out), std::move(q2)};
}

/// One day of the full backbone.
template <class T>
StepResult<T> hbv_step(const State<T>& s, const DayForcing& day, const HbvParams<T>& p, Variant variant,
                       const DayOverrides<T>& overrides = {}, const nn::BoundNnr<T>* nnr = nullptr) {
    auto [snowfall, rainfall] = partition_precip(day.precip, day.temp, ad::value_of(p[Param::TT]));

    auto snow = snow_step(s, snowfall, day.temp, p);
    detail::require_finite(snow.state.snow, "snow_step");
    detail::require_finite(snow.infiltration, "snow_step");

    auto soil = soil_step(snow.state, snow.infiltration, rainfall, day.pet, p, variant, overrides, nnr);
    detail::require_finite(soil.state.soil, "soil_step");
    detail::require_finite(soil.effective_rain, "soil_step");
    detail::require_finite(soil.et, "soil_step");

    auto upper = upper_zone_step(soil.state, soil.effective_rain, soil.excess, p);
    detail::require_finite(upper.state.upper, "upper_zone_step");

    auto lower = lower_zone_step(upper.state, upper.percolation, p);
    detail::require_finite(lower.state.lower, "lower_zone_step");

    StepResult<T> r{std::move(lower.state), {}};
    auto& f = r.fluxes;
    f.snowfall = std::move(snowfall);
    f.rainfall = std::move(rainfall);
    f.melt = std::move(snow.melt);
    f.refreeze = std::move(snow.refreeze);
    f.infiltration = std::move(snow.infiltration);
    f.effective_rain = std::move(soil.effective_rain);
    f.excess = std::move(soil.excess);
    f.et = std::move(soil.et);
    f.percolation = std::move(upper.percolation);
    f.q0 = std::move(upper.q0);
    f.q1 = std::move(upper.q1);
    f.q2 = std::move(lower.q2);
    f.q = f.q0 + f.q1 + f.q2;
    return r;
}

template <class T>
struct Rollout {
    std::vector<State<T>> states;  // end-of-day storages
    std::vector<Fluxes<T>> fluxes;
};

/**
 * Steps days [begin, end) of `forcing` from `initial`. Dynamic series, when
 * present, are indexed by absolute day (same indexing as `forcing`) minus
 * `dynamic_offset`.
 */
template <class T>
Rollout<T> run_hbv(const State<T>& initial, const std::vector<DayForcing>& forcing, std::size_t begin,
                   std::size_t end, const HbvParams<T>& p, const DynamicParams<T>& dynamic, Variant variant,
                   const nn::BoundNnr<T>* nnr = nullptr, std::size_t dynamic_offset = 0) {
    Rollout<T> out;
    out.states.reserve(end - begin);
    out.fluxes.reserve(end - begin);
    State<T> s = initial;
    for (std::size_t t = begin; t < end; ++t) {
        DayOverrides<T> ov;
        if (!dynamic.beta.empty()) ov.beta = &dynamic.beta.at(t - dynamic_offset);
        if (!dynamic.gamma.empty()) ov.gamma = &dynamic.gamma.at(t - dynamic_offset);
        auto r = hbv_step(s, forcing[t], p, variant, ov, nnr);
        s = r.state;
        out.states.push_back(std::move(r.state));
        out.fluxes.push_back(std::move(r.fluxes));
    }
    return out;
}

/// Warm-start storages: empty snow and upper zone, soil at half field
/// capacity, 10 mm in the lower zone.
State<Tensor> initial_state(const HbvParams<Tensor>& p);

struct Simulation {
    std::size_t warmup_days = 0;
    Rollout<Tensor> rollout;  // all simulated days, warm-up included
};

/**
 * Plain-value rollout over all days of `forcing`. Days before
 * `warmup_days` only spin up storages; consumers skip them.
 */
Simulation hbv_simulate(const std::vector<DayForcing>& forcing, const HbvParams<Tensor>& params,
                        const DynamicParams<Tensor>& dynamic, Variant variant, std::size_t warmup_days,
                        const nn::BoundNnr<Tensor>* nnr = nullptr,
                        const std::optional<State<Tensor>>& initial = std::nullopt);

/// Total storage per basin (mm), [B x 1].
Tensor total_storage(const State<Tensor>& s);

/// Max over basins of |dS - (P - E_T - Q)| for one step.
double mass_residual(const State<Tensor>& before, const State<Tensor>& after, const DayForcing& day,
                     const Fluxes<Tensor>& f);

}  // namespace dhbv::hbv
