#pragma once

#include <span>
#include <vector>

namespace dhbv::data {

/// Q_hat = log10(sqrt(Q) + 0.1). Throws DataError for negative Q.
double flow_transform(double q);

inline constexpr double kStdFloor = 1e-5;

/// Per-feature z-score statistics.
struct NormStats {
    std::vector<double> mean;
    std::vector<double> std;  // already floored

    std::size_t size() const { return mean.size(); }
    double normalize(std::size_t feature, double v) const { return (v - mean[feature]) / std[feature]; }
    double denormalize(std::size_t feature, double z) const { return z * std[feature] + mean[feature]; }
};

/// Statistics over rows (each a feature vector), ignoring NaN entries.
/// A feature with no finite value gets mean 0, std 1.
NormStats compute_stats(std::span<const std::vector<double>> rows, std::size_t n_features);

/// Single-feature statistics, ignoring NaN.
NormStats compute_stats(std::span<const double> values);

}  // namespace dhbv::data
