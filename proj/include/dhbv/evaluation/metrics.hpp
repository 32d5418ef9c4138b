#pragma once

#include <span>
#include <vector>

namespace dhbv::eval {

// Every metric skips pairs where either value is NaN (a missing observation).

/// Nash-Sutcliffe efficiency: 1 - sum (sim - obs)^2 / sum (obs - mean(obs))^2.
/// Throws DataError with fewer than 2 valid pairs or zero observed variance.
double nse(std::span<const double> sim, std::span<const double> obs);

/// Root mean squared error over valid pairs. Throws DataError when none are valid.
double rmse(std::span<const double> sim, std::span<const double> obs);

/// Pearson correlation. Throws DataError with fewer than 2 valid pairs or a zero-variance side.
double pearson(std::span<const double> x, std::span<const double> y);

/// Baseflow index sum(Q2) / sum(Q) from unrouted model components.
/// Throws DataError when total flow is not positive.
double bfi_sim(std::span<const double> q2, std::span<const double> q);

/**
 * Pearson r between simulated and reference BFI across basins, skipping
 * basins with a missing reference. When `nse_per_basin` is non-empty, only
 * basins with NSE above `nse_threshold` count. Needs at least 3 basins.
 */
double bfi_spatial_correlation(std::span<const double> bfi_sim, std::span<const double> bfi_ref,
                               std::span<const double> nse_per_basin = {}, double nse_threshold = 0.5);

/// Median; the mean of the two middle values for even counts. Throws on empty input.
double median(std::vector<double> values);

}  // namespace dhbv::eval
