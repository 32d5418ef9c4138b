#pragma once

#include "dhbv/data/dataset.hpp"
#include "dhbv/data/simulation_io.hpp"
#include "dhbv/evaluation/composite.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace dhbv::eval {

struct BasinMetrics {
    std::string basin_id;
    double latitude = 0.0;
    std::size_t observed_days = 0;
    double nse = 0.0;
    double rmse = 0.0;
    double corr = 0.0;
    std::optional<double> bfi_sim;      // absent without Q2/Q columns (benchmark LSTM)
    std::optional<double> bfi_ref;
    std::optional<double> et_r;
    std::optional<double> et_rmse;      // mm per 8-day period
    std::optional<double> mean_et;      // long-term mean simulated E_T, mm/day
    std::optional<double> mean_et_ref;  // over the periods matched with the reference
};

/**
 * Scores one simulation against observed flow (matched by date; NaN days
 * skipped). Pass `et_ref` to add ET metrics; when they cannot be computed a
 * warning is appended and the ET fields stay empty.
 */
BasinMetrics evaluate_basin(const data::BasinSimulation& sim, const data::ObservationSeries& observed,
                            double latitude, std::optional<double> bfi_ref,
                            const std::vector<Composite>* et_ref, std::vector<std::string>* warnings = nullptr);

struct SummaryOptions {
    /// Restrict the BFI spatial correlation to basins with NSE > 0.5.
    bool nse_filter = false;
};

struct Summary {
    std::size_t n_basins = 0;
    double nse_median = 0.0;
    double nse_mean = 0.0;
    double rmse_median = 0.0;
    double corr_median = 0.0;
    std::optional<double> bfi_spatial_r;
    std::size_t bfi_basins = 0;
    bool nse_filter = false;
    std::optional<double> et_r_median;
    std::optional<double> et_rmse_median;
    std::optional<double> et_mean_spatial_r;
    std::size_t et_basins = 0;
    std::vector<std::string> warnings;
};

/// Aggregates per-basin metrics. Needs at least one basin; missing pieces become warnings.
Summary summarize(const std::vector<BasinMetrics>& metrics, const SummaryOptions& options = {});

/// Sorted NSE values paired with their empirical cumulative fraction i/n.
std::vector<std::pair<double, double>> nse_cdf(const std::vector<BasinMetrics>& metrics);

/**
 * Writes per_basin_metrics.csv, summary.json and nse_cdf.csv under `dir`.
 * BFI_ref and ET columns appear only when at least one basin carries them.
 */
void write_report(const std::filesystem::path& dir, const std::vector<BasinMetrics>& metrics, const Summary& summary);

}  // namespace dhbv::eval
