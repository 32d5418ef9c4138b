#include "dhbv/data/synthetic.hpp"

#include "dhbv/data/pet.hpp"
#include "dhbv/routing/unit_hydrograph.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

namespace dhbv::data {

using ad::Tensor;
using hbv::Param;

namespace {

constexpr std::size_t kLatent = 6;
enum Latent { Wet, Cold, Soil, Geology, Vegetation, Relief };

double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

struct Climate {
    double latitude;
    double t_mean, t_amp, t_range;
    double wet_prob, wet_depth, p_season;
};

Climate climate_of(const std::array<double, kLatent>& z) {
    return {32.0 + 14.0 * z[Cold],         14.0 - 10.0 * z[Cold], 9.0 + 4.0 * z[Cold], 8.0 + 5.0 * (1.0 - z[Wet]),
            0.30 + 0.25 * z[Wet],          5.0 + 6.0 * z[Wet],    0.35 * (z[Vegetation] - 0.5)};
}

ForcingSeries make_forcing(const Climate& c, const Date& start, std::size_t n_days, std::mt19937_64& rng) {
    std::normal_distribution<double> g(0.0, 1.0);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    ForcingSeries f;
    double anomaly = 0.0;
    bool wet = false;
    for (std::size_t t = 0; t < n_days; ++t) {
        const Date d = start.plus_days(static_cast<std::int64_t>(t));
        const double phase = 2.0 * std::numbers::pi * (d.day_of_year() - 105) / 365.25;
        anomaly = 0.7 * anomaly + 2.0 * g(rng);
        const double tmean = c.t_mean + c.t_amp * std::sin(phase) + anomaly;
        const double range = std::max(1.0, c.t_range + 1.5 * g(rng));
        // Two-state Markov chain for wet days; wet spells persist.
        const double p_wet = wet ? std::min(0.9, c.wet_prob + 0.25) : c.wet_prob * 0.8;
        wet = u(rng) < p_wet;
        const double depth = c.wet_depth * (1.0 + c.p_season * std::cos(phase));
        const double p = wet ? -std::log(1.0 - u(rng)) * depth : 0.0;
        const double tmin = tmean - 0.5 * range, tmax = tmean + 0.5 * range;
        f.dates.push_back(d);
        f.prcp.push_back(p);
        f.tmin.push_back(tmin);
        f.tmax.push_back(tmax);
        f.tmean.push_back(tmean);
        f.pet.push_back(hargreaves_pet(tmin, tmax, tmean, extraterrestrial_radiation(c.latitude, d.day_of_year())));
    }
    return f;
}

// Climate indices in the spirit of the CAMELS definitions.
void climate_attributes(const ForcingSeries& f, std::vector<double>& a) {
    const double n = static_cast<double>(f.size());
    double p_sum = 0, pet_sum = 0, snow = 0, warm = 0, cold = 0;
    for (std::size_t t = 0; t < f.size(); ++t) {
        p_sum += f.prcp[t];
        pet_sum += f.pet[t];
        if (f.tmean[t] < 0.0) snow += f.prcp[t];
        const int doy = f.dates[t].day_of_year();
        (doy >= 105 && doy < 288 ? warm : cold) += f.prcp[t];
    }
    const double p_mean = p_sum / n, pet_mean = pet_sum / n;
    auto spells = [&](auto pred, double& freq, double& dur) {
        std::size_t days = 0, events = 0;
        bool in = false;
        for (double p : f.prcp) {
            const bool hit = pred(p);
            days += hit;
            if (hit && !in) ++events;
            in = hit;
        }
        freq = static_cast<double>(days) / n * 365.25;
        dur = events ? static_cast<double>(days) / static_cast<double>(events) : 0.0;
    };
    double hf, hd, lf, ld;
    spells([&](double p) { return p >= 5.0 * p_mean; }, hf, hd);
    spells([](double p) { return p < 1.0; }, lf, ld);
    a[attribute_index("p_mean")] = p_mean;
    a[attribute_index("pet_mean")] = pet_mean;
    a[attribute_index("p_seasonality")] = p_sum > 0 ? (warm - cold) / p_sum : 0.0;
    a[attribute_index("frac_snow")] = p_sum > 0 ? snow / p_sum : 0.0;
    a[attribute_index("aridity")] = p_mean > 0 ? pet_mean / p_mean : 0.0;
    a[attribute_index("high_prec_freq")] = hf;
    a[attribute_index("high_prec_dur")] = hd;
    a[attribute_index("low_prec_freq")] = lf;
    a[attribute_index("low_prec_dur")] = ld;
}

void landscape_attributes(const std::array<double, kLatent>& z, std::mt19937_64& rng, BasinRecord& rec) {
    std::normal_distribution<double> g(0.0, 1.0);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    auto& a = rec.attributes;
    auto set = [&](std::string_view name, double v) { a[attribute_index(name)] = v; };
    const double noise = 0.03;
    set("elev_mean", 200.0 + 2500.0 * z[Cold] + 100.0 * g(rng));
    set("slope_mean", 5.0 + 100.0 * z[Relief] + 3.0 * g(rng));
    set("area_gages2", std::exp(3.0 + 4.0 * u(rng)));
    set("frac_forest", std::clamp(z[Vegetation] + noise * g(rng), 0.0, 1.0));
    set("lai_max", 1.0 + 4.0 * z[Vegetation] + 0.1 * g(rng));
    set("lai_diff", 0.5 + 3.0 * z[Vegetation] * (1.0 - 0.5 * z[Cold]) + 0.1 * g(rng));
    set("gvf_max", 0.4 + 0.5 * z[Vegetation] + 0.02 * g(rng));
    set("gvf_diff", 0.1 + 0.4 * z[Cold] + 0.02 * g(rng));
    set("dom_land_cover_frac", 0.5 + 0.5 * u(rng));
    set("root_depth_50", 0.1 + 0.3 * z[Soil] + 0.01 * g(rng));
    set("soil_depth_pelletier", 1.0 + 40.0 * z[Soil] + g(rng));
    set("soil_depth_statgso", 0.5 + 1.5 * z[Soil] + 0.05 * g(rng));
    set("soil_porosity", 0.35 + 0.15 * z[Soil] + 0.005 * g(rng));
    set("soil_conductivity", 0.5 + 5.0 * (1.0 - z[Soil]) + 0.1 * g(rng));
    set("max_water_content", 0.2 + 0.8 * z[Soil] + 0.02 * g(rng));
    const double sand = 20.0 + 60.0 * (1.0 - z[Soil]);
    const double clay = 5.0 + 30.0 * z[Soil] * u(rng);
    set("sand_frac", sand);
    set("clay_frac", clay);
    set("silt_frac", std::max(0.0, 100.0 - sand - clay));
    set("geol_class_1st_frac", 0.5 + 0.5 * u(rng));
    set("geol_class_2nd_frac", 0.5 * u(rng));
    set("carbonate_rocks_frac", std::clamp(z[Geology] - 0.3 + noise * g(rng), 0.0, 1.0));
    set("geol_porosity", 0.05 + 0.2 * z[Geology] + 0.005 * g(rng));
    set("geol_permeability", -16.0 + 4.0 * z[Geology] + 0.1 * g(rng));

    static constexpr const char* kCover[] = {"Grasslands", "Croplands", "Mixed Forests", "Evergreen Needleleaf Forest"};
    static constexpr const char* kGeology[] = {"metamorphics", "siliciclastic sedimentary rocks",
                                               "unconsolidated sediments", "carbonate sedimentary rocks"};
    auto bin = [](double x) { return std::min<std::size_t>(3, static_cast<std::size_t>(x * 4.0)); };
    rec.labels["dom_land_cover"] = kCover[bin(z[Vegetation])];
    rec.labels["geol_class_1st"] = kGeology[bin(z[Geology])];
    rec.labels["geol_class_2nd"] = kGeology[bin(std::fmod(z[Geology] + 0.37, 1.0))];
}

// Unit-interval truth parameters from the latent factors.
std::array<double, hbv::kParamCount> truth_unit(const std::array<double, kLatent>& z) {
    std::array<double, hbv::kParamCount> u{};
    auto set = [&](Param p, double v) { u[static_cast<std::size_t>(p)] = v; };
    set(Param::TT, 0.5 + 0.1 * (z[Cold] - 0.5));
    set(Param::DD, 0.2 + 0.4 * z[Cold]);
    set(Param::RFZ, 0.5);
    set(Param::CWH, 0.5);
    set(Param::FC, 0.15 + 0.5 * z[Soil]);
    set(Param::LP, 0.4 + 0.4 * z[Vegetation]);
    set(Param::Beta, 0.3);
    set(Param::Gamma, 0.4);
    set(Param::Perc, 0.1 + 0.4 * z[Geology]);
    set(Param::K0, 0.3 + 0.3 * z[Relief]);
    set(Param::UZL, 0.1 + 0.3 * (1.0 - z[Relief]));
    set(Param::K1, 0.1 + 0.3 * z[Relief]);
    set(Param::K2, 0.05 + 0.25 * z[Geology]);
    set(Param::RouteA, 0.3 + 0.4 * z[Relief]);
    set(Param::RouteTau, 0.1 + 0.3 * (1.0 - z[Relief]));
    return u;
}

}  // namespace

std::vector<hbv::DayForcing> batch_forcing(const Dataset& ds, const std::vector<std::size_t>& basins,
                                           std::size_t begin, std::size_t end) {
    std::vector<hbv::DayForcing> out;
    out.reserve(end - begin);
    const std::size_t B = basins.size();
    for (std::size_t t = begin; t < end; ++t) {
        hbv::DayForcing d{Tensor(B, 1), Tensor(B, 1), Tensor(B, 1)};
        for (std::size_t i = 0; i < B; ++i) {
            const auto& f = ds.basins[basins[i]].forcing;
            d.precip[i] = f.prcp[t];
            d.temp[i] = f.tmean[t];
            d.pet[i] = f.pet[t];
        }
        out.push_back(std::move(d));
    }
    return out;
}

SyntheticData synthesize_dataset(const SyntheticConfig& cfg) {
    if (cfg.n_basins == 0) throw std::invalid_argument("synthesize_dataset: need at least one basin");
    if (cfg.n_days == 0) throw std::invalid_argument("synthesize_dataset: need at least one day");
    std::mt19937_64 rng(cfg.seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const std::size_t B = cfg.n_basins, N = cfg.n_days;

    SyntheticData out;
    Dataset& ds = out.dataset;
    ds.start = cfg.start;
    ds.n_days = N;
    std::vector<std::array<double, hbv::kParamCount>> physical(B);
    const hbv::ParameterRanges ranges;
    for (std::size_t b = 0; b < B; ++b) {
        std::array<double, kLatent> z{};
        for (auto& v : z) v = u(rng);
        const Climate c = climate_of(z);
        Basin basin;
        char id[32];
        std::snprintf(id, sizeof id, "syn%03zu", b);
        basin.record.id = id;
        basin.record.latitude = c.latitude;
        basin.forcing = make_forcing(c, cfg.start, N, rng);
        basin.record.attributes.assign(kAttributeCount, 0.0);
        climate_attributes(basin.forcing, basin.record.attributes);
        landscape_attributes(z, rng, basin.record);
        basin.record.area_km2 = basin.record.attributes[attribute_index("area_gages2")];
        const auto unit = truth_unit(z);
        for (std::size_t k = 0; k < hbv::kParamCount; ++k) physical[b][k] = ranges.bounds[k].map(unit[k]);
        ds.basins.push_back(std::move(basin));
    }

    // Categorical codes from the sorted label sets.
    for (const char* name : {"dom_land_cover", "geol_class_1st", "geol_class_2nd"}) {
        std::vector<std::string> labels;
        for (const auto& b : ds.basins) labels.push_back(b.record.labels.at(name));
        std::sort(labels.begin(), labels.end());
        labels.erase(std::unique(labels.begin(), labels.end()), labels.end());
        for (auto& b : ds.basins) {
            const auto pos = std::find(labels.begin(), labels.end(), b.record.labels.at(name)) - labels.begin();
            b.record.attributes[attribute_index(name)] = static_cast<double>(pos);
        }
        ds.vocabulary[name] = std::move(labels);
    }

    // Truth rollout with state- and climate-dependent beta/gamma.
    SyntheticTruth& truth = out.truth;
    std::vector<std::size_t> all(B);
    for (std::size_t b = 0; b < B; ++b) all[b] = b;
    truth.forcing = batch_forcing(ds, all, 0, N);
    truth.params = hbv::params_from_values(physical);
    hbv::State<Tensor> state = hbv::initial_state(truth.params);
    Tensor temp_avg = truth.forcing[0].temp;
    for (std::size_t t = 0; t < N; ++t) {
        temp_avg = temp_avg + (truth.forcing[t].temp - temp_avg) * (1.0 / 30.0);
        Tensor gamma(B, 1), beta(B, 1);
        for (std::size_t b = 0; b < B; ++b) {
            gamma[b] = 1.0 + 3.0 * logistic((temp_avg[b] - 10.0) / 3.0);
            const double wetness = std::clamp(state.soil[b] / truth.params[Param::FC][b], 0.0, 1.0);
            beta[b] = 1.2 + 3.5 * (1.0 - wetness);
        }
        hbv::DayOverrides<Tensor> ov{&beta, &gamma};
        auto step = hbv::hbv_step(state, truth.forcing[t], truth.params, hbv::Variant::DeltaGammaBetaT, ov);
        state = step.state;
        truth.dynamic.beta.push_back(std::move(beta));
        truth.dynamic.gamma.push_back(std::move(gamma));
        truth.rollout.states.push_back(std::move(step.state));
        truth.rollout.fluxes.push_back(std::move(step.fluxes));
    }
    std::vector<Tensor> runoff;
    runoff.reserve(N);
    for (const auto& f : truth.rollout.fluxes) runoff.push_back(f.q);
    const auto kernel =
        routing::gamma_kernel(truth.params[Param::RouteA], truth.params[Param::RouteTau], cfg.max_lag);
    truth.routed = routing::route_batch(runoff, kernel);

    std::normal_distribution<double> g(0.0, 1.0);
    for (std::size_t b = 0; b < B; ++b) {
        auto& basin = ds.basins[b];
        basin.flow.dates = basin.forcing.dates;
        basin.flow.q.resize(N);
        basin.flow.mask.assign(N, 1);
        double q2 = 0.0, q = 0.0;
        for (std::size_t t = 0; t < N; ++t) {
            double v = truth.routed[t][b];
            if (cfg.noise_std > 0.0) v *= std::exp(cfg.noise_std * g(rng) - 0.5 * cfg.noise_std * cfg.noise_std);
            basin.flow.q[t] = v;
            q2 += truth.rollout.fluxes[t].q2[b];
            q += truth.rollout.fluxes[t].q[b];
        }
        basin.record.extra["bfi_ref"] = q > 0.0 ? q2 / q : 0.0;
        ds.coverage.push_back({basin.record.id, N, N});
    }
    return out;
}

BasinSimulation SyntheticData::basin_truth(std::size_t basin) const {
    return extract_basin(dataset.basins.at(basin).record.id, dataset.start, truth.forcing, truth.rollout,
                         truth.routed, truth.params, truth.dynamic, hbv::Variant::DeltaGammaBetaT, basin, 0,
                         dataset.n_days);
}

std::filesystem::path write_synthetic(const std::filesystem::path& dir, const SyntheticData& data) {
    const auto manifest = write_dataset(dir, data.dataset);
    for (std::size_t b = 0; b < data.dataset.basins.size(); ++b) {
        write_simulation_csv(dir / "truth" / (data.dataset.basins[b].record.id + ".csv"), data.basin_truth(b));
    }
    return manifest;
}

}  // namespace dhbv::data
