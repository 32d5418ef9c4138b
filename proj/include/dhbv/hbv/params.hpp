#pragma once

#include "dhbv/autodiff/tape.hpp"
#include "dhbv/neural/param_net.hpp"

#include <array>
#include <cstdint>
#include <string_view>
#include <vector>

namespace dhbv::hbv {

using ad::Tensor;
using ad::Variable;

/// HBV backbone flavours. Names follow the model labels used in reports.
enum class Variant : std::uint8_t {
    DplHbv,           // original equations, static parameters
    Delta,            // gamma exponent on ET efficiency, static parameters
    DeltaBetaT,       // delta with daily beta
    DeltaGammaT,      // delta with daily gamma
    DeltaGammaBetaT,  // delta with daily gamma and beta
    DeltaNnr,         // delta with the effective-rainfall network
};

inline constexpr std::array<Variant, 6> kAllVariants = {Variant::DplHbv,      Variant::Delta,
                                                        Variant::DeltaBetaT,  Variant::DeltaGammaT,
                                                        Variant::DeltaGammaBetaT, Variant::DeltaNnr};

std::string_view variant_name(Variant v);
/// Accepts the names produced by variant_name. Throws ConfigError otherwise.
Variant parse_variant(std::string_view name);

enum class Param : std::uint8_t {
    TT,        // snow/rain threshold temperature (degC)
    DD,        // degree-day factor (mm/degC/day)
    RFZ,       // refreeze coefficient
    CWH,       // liquid holding capacity of snow
    FC,        // field capacity (mm)
    LP,        // ET threshold as fraction of FC
    Beta,      // runoff shape exponent
    Gamma,     // ET efficiency exponent
    Perc,      // max percolation (mm/day)
    K0,        // fast flow coefficient (1/day)
    UZL,       // fast flow threshold (mm)
    K1,        // stormflow coefficient (1/day)
    K2,        // baseflow coefficient (1/day)
    RouteA,    // unit hydrograph shape
    RouteTau,  // unit hydrograph scale (day)
};

inline constexpr std::size_t kParamCount = 15;

std::string_view param_name(Param p);

struct Range {
    double lo = 0.0;
    double hi = 1.0;
    double map(double unit) const { return lo + (hi - lo) * unit; }
};

/// Physical parameter bounds; network outputs in (0,1) are mapped affinely onto these.
struct ParameterRanges {
    std::array<Range, kParamCount> bounds{{
        {-2.5, 2.5},   // TT
        {0.5, 10.0},   // DD
        {0.0, 0.1},    // RFZ
        {0.0, 0.2},    // CWH
        {50.0, 1000.0},  // FC
        {0.2, 1.0},    // LP
        {1.0, 6.0},    // Beta
        {1.0, 5.0},    // Gamma
        {0.0, 10.0},   // Perc
        {0.05, 0.9},   // K0
        {0.0, 100.0},  // UZL
        {0.01, 0.5},   // K1
        {0.001, 0.2},  // K2
        {0.1, 2.9},    // RouteA
        {0.1, 6.5},    // RouteTau
    }};

    const Range& operator[](Param p) const { return bounds[static_cast<std::size_t>(p)]; }
    Range& operator[](Param p) { return bounds[static_cast<std::size_t>(p)]; }
};

/// Parameters g_A emits once per basin for a variant, in head-column order.
std::vector<Param> static_params(Variant v);
/// Parameters g_A emits per day for a variant.
std::vector<nn::DynamicKind> dynamic_kinds(Variant v);
bool uses_gamma(Variant v);
bool uses_nnr(Variant v);

/// One value (column [B x 1]) per parameter. Entries a variant does not
/// produce statically are left unbound.
template <class T>
struct HbvParams {
    std::array<T, kParamCount> values{};

    T& operator[](Param p) { return values[static_cast<std::size_t>(p)]; }
    const T& operator[](Param p) const { return values[static_cast<std::size_t>(p)]; }
};

/// Per-day parameter series; empty when the parameter is static.
template <class T>
struct DynamicParams {
    std::vector<T> beta;
    std::vector<T> gamma;
};

/// Maps g_A's static head output [B x k] onto physical parameters.
template <class T>
HbvParams<T> scale_static(const T& unit, Variant v, const ParameterRanges& ranges) {
    const auto order = static_params(v);
    if (ad::value_of(unit).cols() != order.size()) {
        throw std::invalid_argument("scale_static: expected " + std::to_string(order.size()) + " columns");
    }
    HbvParams<T> p;
    for (std::size_t j = 0; j < order.size(); ++j) {
        const Range& r = ranges[order[j]];
        p[order[j]] = slice_cols(unit, j, 1) * (r.hi - r.lo) + r.lo;
    }
    return p;
}

/// Maps g_A's per-day dynamic head outputs (each [B x m]) onto beta^t / gamma^t.
template <class T>
DynamicParams<T> scale_dynamic(const std::vector<T>& unit, Variant v, const ParameterRanges& ranges) {
    const auto kinds = dynamic_kinds(v);
    DynamicParams<T> d;
    for (std::size_t j = 0; j < kinds.size(); ++j) {
        const Range& r = kinds[j] == nn::DynamicKind::Beta ? ranges[Param::Beta] : ranges[Param::Gamma];
        auto& series = kinds[j] == nn::DynamicKind::Beta ? d.beta : d.gamma;
        series.reserve(unit.size());
        for (const auto& u : unit) series.push_back(slice_cols(u, j, 1) * (r.hi - r.lo) + r.lo);
    }
    return d;
}

/// Plain-value copy of a parameter set (drops tape tracking).
HbvParams<Tensor> detach(const HbvParams<Variable>& p);
DynamicParams<Tensor> detach(const DynamicParams<Variable>& d, std::size_t begin, std::size_t end);

/// Builds a [B x 1] parameter set from per-basin physical values.
HbvParams<Tensor> params_from_values(const std::vector<std::array<double, kParamCount>>& per_basin);

}  // namespace dhbv::hbv
