#include "dhbv/hbv/params.hpp"

#include "dhbv/error.hpp"

namespace dhbv::hbv {

std::string_view variant_name(Variant v) {
    switch (v) {
        case Variant::DplHbv: return "dpl_hbv";
        case Variant::Delta: return "delta";
        case Variant::DeltaBetaT: return "delta_beta_t";
        case Variant::DeltaGammaT: return "delta_gamma_t";
        case Variant::DeltaGammaBetaT: return "delta_gamma_beta_t";
        case Variant::DeltaNnr: return "delta_nnr";
    }
    return "unknown";
}

Variant parse_variant(std::string_view name) {
    for (Variant v : kAllVariants) {
        if (variant_name(v) == name) return v;
    }
    throw ConfigError("unknown model variant '" + std::string(name) + "'");
}

std::string_view param_name(Param p) {
    static constexpr std::array<std::string_view, kParamCount> names = {
        "TT", "DD", "RFZ", "CWH", "FC", "LP", "beta", "gamma", "PERC", "K0", "UZL", "K1", "K2", "route_a", "route_tau"};
    return names[static_cast<std::size_t>(p)];
}

std::vector<Param> static_params(Variant v) {
    std::vector<Param> out;
    for (std::size_t i = 0; i < kParamCount; ++i) {
        const auto p = static_cast<Param>(i);
        if (p == Param::Gamma && (v == Variant::DplHbv || v == Variant::DeltaGammaT || v == Variant::DeltaGammaBetaT)) {
            continue;
        }
        if (p == Param::Beta && (v == Variant::DeltaBetaT || v == Variant::DeltaGammaBetaT)) continue;
        out.push_back(p);
    }
    return out;
}

std::vector<nn::DynamicKind> dynamic_kinds(Variant v) {
    switch (v) {
        case Variant::DeltaBetaT: return {nn::DynamicKind::Beta};
        case Variant::DeltaGammaT: return {nn::DynamicKind::Gamma};
        case Variant::DeltaGammaBetaT: return {nn::DynamicKind::Gamma, nn::DynamicKind::Beta};
        default: return {};
    }
}

bool uses_gamma(Variant v) { return v != Variant::DplHbv; }
bool uses_nnr(Variant v) { return v == Variant::DeltaNnr; }

HbvParams<Tensor> detach(const HbvParams<Variable>& p) {
    HbvParams<Tensor> out;
    for (std::size_t i = 0; i < kParamCount; ++i) {
        if (p.values[i].valid()) out.values[i] = p.values[i].value();
    }
    return out;
}

DynamicParams<Tensor> detach(const DynamicParams<Variable>& d, std::size_t begin, std::size_t end) {
    DynamicParams<Tensor> out;
    auto copy = [&](const std::vector<Variable>& src, std::vector<Tensor>& dst) {
        if (src.empty()) return;
        for (std::size_t t = begin; t < end; ++t) dst.push_back(src.at(t).value());
    };
    copy(d.beta, out.beta);
    copy(d.gamma, out.gamma);
    return out;
}

HbvParams<Tensor> params_from_values(const std::vector<std::array<double, kParamCount>>& per_basin) {
    HbvParams<Tensor> out;
    const std::size_t n = per_basin.size();
    for (std::size_t i = 0; i < kParamCount; ++i) {
        Tensor col(n, 1);
        for (std::size_t b = 0; b < n; ++b) col[b] = per_basin[b][i];
        out.values[i] = std::move(col);
    }
    return out;
}

}  // namespace dhbv::hbv
