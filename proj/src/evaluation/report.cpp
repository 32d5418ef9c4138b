#include "dhbv/evaluation/report.hpp"

#include "dhbv/data/csv.hpp"
#include "dhbv/error.hpp"
#include "dhbv/evaluation/metrics.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

namespace dhbv::eval {

using json = nlohmann::json;

BasinMetrics evaluate_basin(const data::BasinSimulation& sim, const data::ObservationSeries& observed,
                            double latitude, std::optional<double> bfi_ref,
                            const std::vector<Composite>* et_ref, std::vector<std::string>* warnings) {
    if (sim.size() == 0) throw DataError("basin " + sim.basin_id + ": empty simulation");
    if (observed.size() == 0) throw DataError("basin " + sim.basin_id + ": no observed flow");

    const auto& q_sim = sim.column("Q_routed");
    std::vector<double> obs(sim.size(), std::numeric_limits<double>::quiet_NaN());
    const auto offset = data::days_between(observed.dates.front(), sim.dates.front());
    for (std::size_t i = 0; i < sim.size(); ++i) {
        const auto k = offset + static_cast<std::int64_t>(i);
        if (k >= 0 && k < static_cast<std::int64_t>(observed.size())) obs[i] = observed.q[static_cast<std::size_t>(k)];
    }

    BasinMetrics m;
    m.basin_id = sim.basin_id;
    m.latitude = latitude;
    m.observed_days = static_cast<std::size_t>(std::count_if(obs.begin(), obs.end(), [](double v) { return !std::isnan(v); }));
    try {
        m.nse = nse(q_sim, obs);
        m.rmse = rmse(q_sim, obs);
        m.corr = pearson(q_sim, obs);
    } catch (const DataError& e) {
        throw DataError("basin " + sim.basin_id + ": " + e.what());
    }
    if (sim.columns.contains("Q2") && sim.columns.contains("Q")) {
        m.bfi_sim = bfi_sim(sim.column("Q2"), sim.column("Q"));
    }
    m.bfi_ref = bfi_ref;
    if (sim.columns.contains("E_T")) {
        const auto& et = sim.column("E_T");
        m.mean_et = std::accumulate(et.begin(), et.end(), 0.0) / static_cast<double>(et.size());
        if (et_ref) {
            const auto composites = et_8day_composite(et, sim.dates.front());
            if (auto em = et_metrics(composites, *et_ref, warnings, sim.basin_id)) {
                m.et_r = em->r;
                m.et_rmse = em->rmse;
                m.mean_et_ref = em->mean_ref;
            }
        }
    } else if (et_ref && warnings) {
        warnings->push_back("basin " + sim.basin_id + ": ET metrics skipped, simulation has no E_T column");
    }
    return m;
}

Summary summarize(const std::vector<BasinMetrics>& metrics, const SummaryOptions& options) {
    if (metrics.empty()) throw DataError("summarize: no basins");
    Summary s;
    s.n_basins = metrics.size();
    s.nse_filter = options.nse_filter;
    std::vector<double> nses, rmses, corrs;
    for (const auto& m : metrics) {
        nses.push_back(m.nse);
        rmses.push_back(m.rmse);
        corrs.push_back(m.corr);
    }
    s.nse_median = median(nses);
    s.nse_mean = std::accumulate(nses.begin(), nses.end(), 0.0) / static_cast<double>(nses.size());
    s.rmse_median = median(rmses);
    s.corr_median = median(corrs);

    std::vector<double> bsim, bref, bnse;
    for (const auto& m : metrics) {
        if (!m.bfi_sim || !m.bfi_ref || std::isnan(*m.bfi_ref)) continue;
        if (options.nse_filter && !(m.nse > 0.5)) continue;
        bsim.push_back(*m.bfi_sim);
        bref.push_back(*m.bfi_ref);
    }
    s.bfi_basins = bsim.size();
    if (!bsim.empty()) {
        try {
            s.bfi_spatial_r = bfi_spatial_correlation(bsim, bref);
        } catch (const DataError& e) {
            s.warnings.push_back(std::string("BFI spatial correlation skipped: ") + e.what());
        }
    }

    std::vector<double> et_r, et_rmse, et_sim, et_ref;
    for (const auto& m : metrics) {
        if (!m.et_r) continue;
        et_r.push_back(*m.et_r);
        et_rmse.push_back(*m.et_rmse);
        et_sim.push_back(*m.mean_et);
        et_ref.push_back(*m.mean_et_ref);
    }
    s.et_basins = et_r.size();
    if (!et_r.empty()) {
        s.et_r_median = median(et_r);
        s.et_rmse_median = median(et_rmse);
        if (et_r.size() >= 3) {
            try {
                s.et_mean_spatial_r = pearson(et_sim, et_ref);
            } catch (const DataError& e) {
                s.warnings.push_back(std::string("ET spatial correlation skipped: ") + e.what());
            }
        }
    }
    return s;
}

std::vector<std::pair<double, double>> nse_cdf(const std::vector<BasinMetrics>& metrics) {
    std::vector<double> v;
    for (const auto& m : metrics) v.push_back(m.nse);
    std::sort(v.begin(), v.end());
    std::vector<std::pair<double, double>> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        out.emplace_back(v[i], static_cast<double>(i + 1) / static_cast<double>(v.size()));
    }
    return out;
}

namespace {

std::string cell(const std::optional<double>& v) { return v ? data::format_number(*v) : std::string{}; }

json opt(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

}  // namespace

void write_report(const std::filesystem::path& dir, const std::vector<BasinMetrics>& metrics, const Summary& summary) {
    std::filesystem::create_directories(dir);
    const bool has_bfi_sim = std::any_of(metrics.begin(), metrics.end(), [](const auto& m) { return m.bfi_sim.has_value(); });
    const bool has_bfi_ref = std::any_of(metrics.begin(), metrics.end(), [](const auto& m) { return m.bfi_ref.has_value(); });
    const bool has_et = std::any_of(metrics.begin(), metrics.end(), [](const auto& m) { return m.mean_et.has_value(); });
    const bool has_et_ref = std::any_of(metrics.begin(), metrics.end(), [](const auto& m) { return m.et_r.has_value(); });

    std::vector<std::string> header = {"basin_id", "latitude", "observed_days", "nse", "rmse", "corr"};
    if (has_bfi_sim) header.push_back("bfi_sim");
    if (has_bfi_ref) header.push_back("bfi_ref");
    if (has_et) header.push_back("mean_et");
    if (has_et_ref) {
        header.push_back("et_r");
        header.push_back("et_rmse");
        header.push_back("mean_et_ref");
    }
    data::CsvWriter table(header);
    for (const auto& m : metrics) {
        std::vector<std::string> row = {m.basin_id, data::format_number(m.latitude), std::to_string(m.observed_days),
                                        data::format_number(m.nse), data::format_number(m.rmse),
                                        data::format_number(m.corr)};
        if (has_bfi_sim) row.push_back(cell(m.bfi_sim));
        if (has_bfi_ref) row.push_back(cell(m.bfi_ref));
        if (has_et) row.push_back(cell(m.mean_et));
        if (has_et_ref) {
            row.push_back(cell(m.et_r));
            row.push_back(cell(m.et_rmse));
            row.push_back(cell(m.mean_et_ref));
        }
        table.add_row(std::move(row));
    }
    table.write(dir / "per_basin_metrics.csv");

    data::CsvWriter cdf({"nse", "cumulative_fraction"});
    for (const auto& [v, f] : nse_cdf(metrics)) cdf.add_row({data::format_number(v), data::format_number(f)});
    cdf.write(dir / "nse_cdf.csv");

    json j;
    j["n_basins"] = summary.n_basins;
    j["nse_median"] = summary.nse_median;
    j["nse_mean"] = summary.nse_mean;
    j["rmse_median"] = summary.rmse_median;
    j["corr_median"] = summary.corr_median;
    j["bfi_spatial_r"] = opt(summary.bfi_spatial_r);
    j["bfi_basins"] = summary.bfi_basins;
    j["bfi_nse_filter"] = summary.nse_filter;
    if (has_et_ref) {
        j["et_r_median"] = opt(summary.et_r_median);
        j["et_rmse_median"] = opt(summary.et_rmse_median);
        j["et_mean_spatial_r"] = opt(summary.et_mean_spatial_r);
        j["et_basins"] = summary.et_basins;
    }
    j["warnings"] = summary.warnings;
    std::ofstream out(dir / "summary.json");
    if (!out) throw DataError("cannot write " + (dir / "summary.json").string());
    out << j.dump(2) << '\n';
}

}  // namespace dhbv::eval
