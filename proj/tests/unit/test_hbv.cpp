#include "doctest.h"

#include "dhbv/autodiff/gradcheck.hpp"
#include "dhbv/hbv/model.hpp"
#include "dhbv/routing/unit_hydrograph.hpp"

#include <cmath>
#include <random>

using namespace dhbv;
using namespace dhbv::hbv;

namespace {

using Values = std::array<double, kParamCount>;

Values base_values() {
    Values v{};
    v[size_t(Param::TT)] = 0.0;
    v[size_t(Param::DD)] = 3.0;
    v[size_t(Param::RFZ)] = 0.05;
    v[size_t(Param::CWH)] = 0.1;
    v[size_t(Param::FC)] = 200.0;
    v[size_t(Param::LP)] = 0.5;
    v[size_t(Param::Beta)] = 2.0;
    v[size_t(Param::Gamma)] = 1.0;
    v[size_t(Param::Perc)] = 2.0;
    v[size_t(Param::K0)] = 0.3;
    v[size_t(Param::UZL)] = 20.0;
    v[size_t(Param::K1)] = 0.1;
    v[size_t(Param::K2)] = 0.05;
    v[size_t(Param::RouteA)] = 1.5;
    v[size_t(Param::RouteTau)] = 2.0;
    return v;
}

HbvParams<Tensor> one_basin(const Values& v) { return params_from_values({v}); }

State<Tensor> scalar_state(double snow, double liquid, double soil, double upper, double lower) {
    return {Tensor::scalar(snow), Tensor::scalar(liquid), Tensor::scalar(soil), Tensor::scalar(upper),
            Tensor::scalar(lower)};
}

DayForcing day(double p, double t, double e) { return {Tensor::scalar(p), Tensor::scalar(t), Tensor::scalar(e)}; }

Values random_values(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const ParameterRanges ranges;
    Values v{};
    for (std::size_t i = 0; i < kParamCount; ++i) v[i] = ranges.bounds[i].map(u(rng));
    return v;
}

// Seasonal forcing with storms and freezing winters, for `n` basins.
std::vector<DayForcing> make_forcing(std::size_t n_basins, std::size_t days, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::normal_distribution<double> g(0.0, 1.0);
    std::vector<DayForcing> f;
    for (std::size_t t = 0; t < days; ++t) {
        Tensor p(n_basins, 1), temp(n_basins, 1), pet(n_basins, 1);
        for (std::size_t b = 0; b < n_basins; ++b) {
            const double season = std::sin(2 * M_PI * (static_cast<double>(t) - 100.0) / 365.0);
            temp[b] = 8.0 + 12.0 * season + 3.0 * g(rng);
            p[b] = u(rng) < 0.35 ? -std::log(u(rng) + 1e-12) * 8.0 : 0.0;
            pet[b] = std::max(0.0, 2.0 + 2.0 * season + 0.3 * g(rng));
        }
        f.push_back({p, temp, pet});
    }
    return f;
}

DynamicParams<Tensor> random_dynamic(Variant v, std::size_t n_basins, std::size_t days, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    DynamicParams<Tensor> d;
    for (auto k : dynamic_kinds(v)) {
        auto& s = k == nn::DynamicKind::Beta ? d.beta : d.gamma;
        const double hi = k == nn::DynamicKind::Beta ? 6.0 : 5.0;
        for (std::size_t t = 0; t < days; ++t) {
            Tensor x(n_basins, 1);
            for (auto& e : x.values()) e = 1.0 + (hi - 1.0) * u(rng);
            s.push_back(x);
        }
    }
    return d;
}

// Scalar reference implementation of one day, written independently of the
// templated model code.
struct RefDay {
    double snow, liquid, soil, upper, lower;
    double melt, refreeze, infil, peff, excess, et, perc, q0, q1, q2, q;
};

RefDay ref_step(const Values& v, bool with_gamma, double gamma, double beta, RefDay s, double p, double t, double ep) {
    auto P = [&](Param k) { return v[size_t(k)]; };
    const double snowfall = t < P(Param::TT) ? p : 0.0;
    const double rain = p - snowfall;
    double pack = s.snow + snowfall;
    s.melt = std::min(P(Param::DD) * std::max(t - P(Param::TT), 0.0), pack);
    pack -= s.melt;
    double liq = s.liquid + s.melt;
    s.refreeze = std::min(P(Param::RFZ) * P(Param::DD) * std::max(P(Param::TT) - t, 0.0), liq);
    pack += s.refreeze;
    liq -= s.refreeze;
    s.infil = std::max(liq - P(Param::CWH) * pack, 0.0);
    liq -= s.infil;
    s.snow = pack;
    s.liquid = liq;
    const double fc = P(Param::FC);
    const double w_in = s.infil + rain;
    const double wet = std::min(std::pow(std::max(s.soil / fc, 1e-8), beta), 1.0);
    s.peff = wet * w_in;
    s.soil += w_in - s.peff;
    s.excess = std::max(s.soil - fc, 0.0);
    s.soil -= s.excess;
    const double r = s.soil / (fc * P(Param::LP));
    const double eta = with_gamma ? std::min(std::pow(std::max(r, 1e-8), gamma), 1.0) : std::min(r, 1.0);
    s.et = std::min(eta * ep, s.soil);
    s.soil -= s.et;
    s.upper += s.peff + s.excess;
    s.perc = std::min(P(Param::Perc), s.upper);
    s.upper -= s.perc;
    s.q0 = std::min(P(Param::K0) * std::max(s.upper - P(Param::UZL), 0.0), s.upper);
    s.upper -= s.q0;
    s.q1 = std::min(P(Param::K1) * s.upper, s.upper);
    s.upper -= s.q1;
    s.lower += s.perc;
    s.q2 = std::min(P(Param::K2) * s.lower, s.lower);
    s.lower -= s.q2;
    s.q = s.q0 + s.q1 + s.q2;
    return s;
}

}  // namespace

TEST_SUITE("hbv") {

TEST_CASE("partition_precip") {
    auto [s1, r1] = partition_precip(Tensor::scalar(10), Tensor::scalar(-5), Tensor::scalar(0));
    CHECK(s1.item() == 10.0);
    CHECK(r1.item() == 0.0);
    auto [s2, r2] = partition_precip(Tensor::scalar(10), Tensor::scalar(5), Tensor::scalar(0));
    CHECK(s2.item() == 0.0);
    CHECK(r2.item() == 10.0);
    auto [s3, r3] = partition_precip(Tensor::scalar(0), Tensor::scalar(-5), Tensor::scalar(0));
    CHECK(s3.item() == 0.0);
    CHECK(r3.item() == 0.0);
}

TEST_CASE("snow_step") {
    auto v = base_values();
    v[size_t(Param::RFZ)] = 0.0;
    v[size_t(Param::CWH)] = 0.0;
    const auto p = one_basin(v);
    auto r = snow_step(scalar_state(10, 0, 0, 0, 0), Tensor::scalar(0), Tensor::scalar(2), p);
    CHECK(r.melt.item() == 6.0);
    CHECK(r.state.snow.item() == 4.0);
    r = snow_step(scalar_state(4, 0, 0, 0, 0), Tensor::scalar(0), Tensor::scalar(2), p);
    CHECK(r.melt.item() == 4.0);
    CHECK(r.state.snow.item() == 0.0);
    const auto pr = one_basin(base_values());
    r = snow_step(scalar_state(5, 0, 0, 0, 0), Tensor::scalar(0), Tensor::scalar(-3), pr);
    CHECK(r.melt.item() == 0.0);
    CHECK(r.refreeze.item() == 0.0);
    CHECK(r.infiltration.item() == 0.0);
}

TEST_CASE("soil_step") {
    auto v = base_values();
    const auto p = one_basin(v);
    SUBCASE("wetness curve") {
        // W = (50/200)^2 = 0.0625, P_eff = 0.0625 * 8
        auto r = soil_step(scalar_state(0, 0, 50, 0, 0), Tensor::scalar(0), Tensor::scalar(8), Tensor::scalar(0), p,
                           Variant::DplHbv);
        CHECK(r.effective_rain.item() == doctest::Approx(0.5).epsilon(1e-14));
    }
    SUBCASE("saturated soil passes all water") {
        auto r = soil_step(scalar_state(0, 0, 200, 0, 0), Tensor::scalar(3), Tensor::scalar(5), Tensor::scalar(0), p,
                           Variant::DplHbv);
        CHECK(r.effective_rain.item() == doctest::Approx(8.0).epsilon(1e-14));
    }
    SUBCASE("full efficiency at the LP threshold") {
        for (double gamma : {1.0, 2.5, 5.0}) {
            auto vg = v;
            vg[size_t(Param::Gamma)] = gamma;
            auto r = soil_step(scalar_state(0, 0, 100, 0, 0), Tensor::scalar(0), Tensor::scalar(0),
                               Tensor::scalar(3), one_basin(vg), Variant::Delta);
            CHECK(r.et.item() == doctest::Approx(3.0).epsilon(1e-12));
        }
    }
    SUBCASE("ET capped by storage") {
        auto r = soil_step(scalar_state(0, 0, 0.5, 0, 0), Tensor::scalar(0), Tensor::scalar(0), Tensor::scalar(4),
                           p, Variant::DplHbv);
        CHECK(r.et.item() <= 0.5);
        CHECK(r.state.soil.item() >= 0.0);
    }
}

TEST_CASE("upper and lower zones") {
    auto v = base_values();
    v[size_t(Param::Perc)] = 2.0;
    v[size_t(Param::K1)] = 0.1;
    v[size_t(Param::UZL)] = 50.0;
    v[size_t(Param::K0)] = 0.3;
    auto u = upper_zone_step(scalar_state(0, 0, 0, 30, 0), Tensor::scalar(0), Tensor::scalar(0), one_basin(v));
    CHECK(u.percolation.item() == 2.0);
    CHECK(u.q0.item() == 0.0);
    CHECK(u.q1.item() == doctest::Approx(2.8).epsilon(1e-14));
    u = upper_zone_step(scalar_state(0, 0, 0, 0, 0), Tensor::scalar(0), Tensor::scalar(0), one_basin(v));
    CHECK(u.percolation.item() == 0.0);
    CHECK(u.q0.item() == 0.0);
    CHECK(u.q1.item() == 0.0);

    v[size_t(Param::K2)] = 0.05;
    auto l = lower_zone_step(scalar_state(0, 0, 0, 0, 100), Tensor::scalar(0), one_basin(v));
    CHECK(l.q2.item() == doctest::Approx(5.0).epsilon(1e-14));
    l = lower_zone_step(scalar_state(0, 0, 0, 0, 0), Tensor::scalar(0), one_basin(v));
    CHECK(l.q2.item() == 0.0);
    v[size_t(Param::K2)] = 0.0;
    l = lower_zone_step(scalar_state(0, 0, 0, 0, 7), Tensor::scalar(3), one_basin(v));
    CHECK(l.q2.item() == 0.0);
    CHECK(l.state.lower.item() == 10.0);
}

TEST_CASE("hbv_step") {
    SUBCASE("dry and empty") {
        auto r = hbv_step(scalar_state(0, 0, 0, 0, 0), day(0, 5, 0), one_basin(base_values()), Variant::Delta);
        for (const Tensor* x : {&r.state.snow, &r.state.liquid, &r.state.soil, &r.state.upper, &r.state.lower,
                                &r.fluxes.q, &r.fluxes.et, &r.fluxes.melt})
            CHECK(x->item() == 0.0);
    }
    SUBCASE("hand-traced day") {
        auto r = hbv_step(scalar_state(10, 0.5, 80, 25, 40), day(6, 1.5, 3), one_basin(base_values()),
                          Variant::DplHbv);
        const auto& f = r.fluxes;
        CHECK(f.melt.item() == doctest::Approx(4.5).epsilon(1e-13));
        CHECK(f.infiltration.item() == doctest::Approx(4.45).epsilon(1e-13));
        CHECK(f.effective_rain.item() == doctest::Approx(1.672).epsilon(1e-13));
        CHECK(f.et.item() == doctest::Approx(2.66334).epsilon(1e-13));
        CHECK(f.q0.item() == doctest::Approx(1.4016).epsilon(1e-13));
        CHECK(f.q1.item() == doctest::Approx(2.32704).epsilon(1e-13));
        CHECK(f.q2.item() == doctest::Approx(2.1).epsilon(1e-13));
        CHECK(f.q.item() == doctest::Approx(5.82864).epsilon(1e-13));
        CHECK(r.state.snow.item() == doctest::Approx(5.5).epsilon(1e-13));
        CHECK(r.state.liquid.item() == doctest::Approx(0.55).epsilon(1e-13));
        CHECK(r.state.soil.item() == doctest::Approx(86.11466).epsilon(1e-13));
        CHECK(r.state.upper.item() == doctest::Approx(20.94336).epsilon(1e-13));
        CHECK(r.state.lower.item() == doctest::Approx(39.9).epsilon(1e-13));
    }
    SUBCASE("NaN forcing is reported with the sub-step") {
        try {
            (void)hbv_step(scalar_state(0, 0, 10, 0, 0), day(std::nan(""), 5, 0), one_basin(base_values()),
                           Variant::Delta);
            FAIL("expected an error");
        } catch (const NumericsError& e) {
            CHECK(std::string(e.what()).find("_step") != std::string::npos);
        }
    }
}

TEST_CASE("model matches scalar reference over random rollouts") {
    std::mt19937_64 rng(17);
    for (int rep = 0; rep < 10; ++rep) {
        const Values v = random_values(rng);
        const auto f = make_forcing(1, 200, rng);
        for (Variant var : {Variant::DplHbv, Variant::Delta}) {
            const auto sim = hbv_simulate(f, one_basin(v), {}, var, 0);
            RefDay s{0, 0, 0.5 * v[size_t(Param::FC)], 0, 10};
            for (std::size_t t = 0; t < f.size(); ++t) {
                s = ref_step(v, var == Variant::Delta, v[size_t(Param::Gamma)], v[size_t(Param::Beta)], s,
                             f[t].precip.item(), f[t].temp.item(), f[t].pet.item());
                const auto& fl = sim.rollout.fluxes[t];
                REQUIRE(fl.q.item() == doctest::Approx(s.q).epsilon(1e-10));
                REQUIRE(fl.et.item() == doctest::Approx(s.et).epsilon(1e-10));
                REQUIRE(sim.rollout.states[t].soil.item() == doctest::Approx(s.soil).epsilon(1e-10));
            }
        }
    }
}

TEST_CASE("mass balance and non-negativity for every variant") {
    std::mt19937_64 rng(23);
    const std::size_t B = 6, N = 400;
    const auto f = make_forcing(B, N, rng);
    std::vector<Values> per_basin;
    for (std::size_t b = 0; b < B; ++b) per_basin.push_back(random_values(rng));
    const auto params = params_from_values(per_basin);
    auto nnr = nn::NnrNet::init({}, 5);
    nn::ValueBinder vb;
    const auto bound = nn::bind_nnr(nnr, vb);
    for (Variant var : kAllVariants) {
        CAPTURE(variant_name(var));
        const auto dyn = random_dynamic(var, B, N, rng);
        const auto sim = hbv_simulate(f, params, dyn, var, 0, &bound);
        State<Tensor> prev = initial_state(params);
        double worst = 0.0;
        bool nonneg = true;
        for (std::size_t t = 0; t < N; ++t) {
            const auto& s = sim.rollout.states[t];
            const auto& fl = sim.rollout.fluxes[t];
            worst = std::max(worst, mass_residual(prev, s, f[t], fl));
            for (const Tensor* x : {&s.snow, &s.liquid, &s.soil, &s.upper, &s.lower, &fl.melt, &fl.refreeze,
                                    &fl.infiltration, &fl.effective_rain, &fl.excess, &fl.et, &fl.percolation,
                                    &fl.q0, &fl.q1, &fl.q2, &fl.q})
                for (double e : x->values()) nonneg = nonneg && e >= 0.0;
            const Tensor qsum = fl.q0 + fl.q1 + fl.q2;
            CHECK(qsum == fl.q);
            // eta and W stay in [0,1]: ET never exceeds demand, P_eff never exceeds supply.
            for (std::size_t b = 0; b < B; ++b) {
                CHECK(fl.et[b] <= f[t].pet[b] + 1e-12);
                CHECK(fl.effective_rain[b] <= fl.infiltration[b] + fl.rainfall[b] + 1e-12);
            }
            const Tensor liq_cap = s.liquid - params[Param::CWH] * s.snow;
            for (double e : liq_cap.values()) CHECK(e <= 1e-9);
            prev = s;
        }
        CHECK(worst < 1e-8);
        CHECK(nonneg);
    }
}

TEST_CASE("delta with gamma = 1 reproduces the original soil step") {
    std::mt19937_64 rng(31);
    auto v = random_values(rng);
    v[size_t(Param::Gamma)] = 1.0;
    const auto f = make_forcing(1, 365, rng);
    const auto a = hbv_simulate(f, one_basin(v), {}, Variant::DplHbv, 0);
    const auto b = hbv_simulate(f, one_basin(v), {}, Variant::Delta, 0);
    for (std::size_t t = 0; t < f.size(); ++t) {
        CHECK(a.rollout.fluxes[t].q == b.rollout.fluxes[t].q);
        CHECK(a.rollout.fluxes[t].et == b.rollout.fluxes[t].et);
    }
}

TEST_CASE("monotonicity spot checks") {
    std::mt19937_64 rng(37);
    for (int rep = 0; rep < 10; ++rep) {
        const auto v = random_values(rng);
        const auto f = make_forcing(1, 120, rng);
        auto hi = v;
        hi[size_t(Param::K2)] = std::min(0.2, v[size_t(Param::K2)] * 1.5);
        const auto s = scalar_state(0, 0, 100, 10, 50);
        const auto lo_q = hbv_step(s, f[0], one_basin(v), Variant::Delta).fluxes.q2.item();
        const auto hi_q = hbv_step(s, f[0], one_basin(hi), Variant::Delta).fluxes.q2.item();
        CHECK(hi_q >= lo_q);

        auto wetter = f;
        wetter[10].precip = wetter[10].precip + 15.0;
        const auto base = hbv_simulate(f, one_basin(v), {}, Variant::Delta, 0);
        const auto more = hbv_simulate(wetter, one_basin(v), {}, Variant::Delta, 0);
        double qa = 0, qb = 0;
        for (std::size_t t = 0; t < f.size(); ++t) {
            qa += base.rollout.fluxes[t].q.item();
            qb += more.rollout.fluxes[t].q.item();
        }
        CHECK(qb >= qa - 1e-12);
    }
}

TEST_CASE("hbv_simulate") {
    std::mt19937_64 rng(41);
    const auto v = base_values();
    SUBCASE("constant forcing converges to a fixed point") {
        std::vector<DayForcing> f(3000, day(3.0, 10.0, 1.5));
        const auto sim = hbv_simulate(f, one_basin(v), {}, Variant::Delta, 0);
        const auto& st = sim.rollout.states;
        for (std::size_t t = st.size() - 100; t < st.size(); ++t) {
            const double ds = std::abs(total_storage(st[t]).item() - total_storage(st[t - 1]).item());
            CHECK(ds < 1e-6);
        }
    }
    SUBCASE("warm-up zero reproduces the raw rollout") {
        const auto f = make_forcing(1, 50, rng);
        const auto sim = hbv_simulate(f, one_basin(v), {}, Variant::Delta, 0);
        const auto raw = run_hbv(initial_state(one_basin(v)), f, 0, f.size(), one_basin(v), {}, Variant::Delta);
        for (std::size_t t = 0; t < f.size(); ++t) CHECK(sim.rollout.fluxes[t].q == raw.fluxes[t].q);
    }
    SUBCASE("deterministic") {
        const auto f = make_forcing(3, 100, rng);
        const auto p = params_from_values({v, v, v});
        const auto a = hbv_simulate(f, p, {}, Variant::Delta, 10);
        const auto b = hbv_simulate(f, p, {}, Variant::Delta, 10);
        for (std::size_t t = 0; t < f.size(); ++t) CHECK(a.rollout.fluxes[t].q == b.rollout.fluxes[t].q);
    }
    SUBCASE("errors") {
        const auto f = make_forcing(1, 30, rng);
        CHECK_THROWS_AS(hbv_simulate(f, one_basin(v), {}, Variant::Delta, 30), std::invalid_argument);
        auto dyn = random_dynamic(Variant::DeltaBetaT, 1, 29, rng);
        CHECK_THROWS_AS(hbv_simulate(f, one_basin(v), dyn, Variant::DeltaBetaT, 0), std::invalid_argument);
        CHECK_THROWS_AS(hbv_simulate(f, one_basin(v), {}, Variant::DeltaGammaT, 0), std::invalid_argument);
        CHECK_THROWS_AS(hbv_simulate(f, one_basin(v), {}, Variant::DeltaNnr, 0), std::invalid_argument);
    }
}

TEST_CASE("gradient of Q with respect to K2 on a short rollout") {
    std::mt19937_64 rng(43);
    const auto f = make_forcing(1, 5, rng);
    const auto v = base_values();
    auto fn = [&](ad::Tape& tape, const std::vector<ad::Variable>& in) {
        HbvParams<ad::Variable> p;
        for (std::size_t i = 0; i < kParamCount; ++i) p.values[i] = tape.constant(Tensor::scalar(v[i]));
        p[Param::K2] = in[0];
        State<ad::Variable> s;
        const auto init = initial_state(one_basin(v));
        s.snow = tape.constant(init.snow);
        s.liquid = tape.constant(init.liquid);
        s.soil = tape.constant(init.soil);
        s.upper = tape.constant(init.upper);
        s.lower = tape.constant(init.lower);
        const auto r = run_hbv(s, f, 0, f.size(), p, {}, Variant::Delta);
        ad::Variable total = r.fluxes[0].q;
        for (std::size_t t = 1; t < r.fluxes.size(); ++t) total = total + r.fluxes[t].q;
        return total;
    };
    CHECK(ad::gradcheck(fn, {Tensor::scalar(0.05)}).max_rel_error < 1e-6);
}

TEST_CASE("30-day rollout gradient for every static parameter") {
    std::mt19937_64 rng(47);
    for (int rep = 0; rep < 5; ++rep) {
        // Checked in the unit space the network emits, so every parameter
        // has a comparable gradient scale.
        std::uniform_real_distribution<double> u(0.05, 0.95);
        const auto f = make_forcing(1, 30, rng);
        std::vector<Tensor> inputs;
        for (std::size_t i = 0; i < kParamCount; ++i) inputs.push_back(Tensor::scalar(u(rng)));
        const ParameterRanges ranges;
        auto fn = [&](ad::Tape& tape, const std::vector<ad::Variable>& in) {
            HbvParams<ad::Variable> p;
            for (std::size_t i = 0; i < kParamCount; ++i)
                p.values[i] = in[i] * (ranges.bounds[i].hi - ranges.bounds[i].lo) + ranges.bounds[i].lo;
            const auto init = initial_state(detach(p));
            State<ad::Variable> s{tape.constant(init.snow), tape.constant(init.liquid), p[Param::FC] * 0.5,
                                  tape.constant(init.upper), tape.constant(init.lower)};
            const auto r = run_hbv(s, f, 0, f.size(), p, {}, Variant::Delta);
            std::vector<ad::Variable> q;
            for (const auto& fl : r.fluxes) q.push_back(fl.q);
            const auto kernel = routing::gamma_kernel(p[Param::RouteA], p[Param::RouteTau], 15);
            const auto routed = routing::route_batch(q, kernel);
            ad::Variable total = routed[0];
            for (std::size_t t = 1; t < routed.size(); ++t) total = total + routed[t];
            return total * (1.0 / static_cast<double>(routed.size()));
        };
        const auto report = ad::gradcheck(fn, inputs, 1e-5);
        CAPTURE(report.worst_input);
        CAPTURE(report.analytic);
        CAPTURE(report.numeric);
        CHECK(report.max_rel_error < 1e-4);
    }
}

}  // TEST_SUITE
