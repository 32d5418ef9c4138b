#include "dhbv/evaluation/metrics.hpp"

#include "dhbv/error.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace dhbv::eval {

namespace {

void check_lengths(std::span<const double> a, std::span<const double> b, const char* what) {
    if (a.size() != b.size()) {
        throw std::invalid_argument(std::string(what) + ": series lengths differ (" + std::to_string(a.size()) +
                                    " vs " + std::to_string(b.size()) + ")");
    }
}

bool valid(double a, double b) { return !std::isnan(a) && !std::isnan(b); }

}  // namespace

double nse(std::span<const double> sim, std::span<const double> obs) {
    check_lengths(sim, obs, "nse");
    double mean = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < obs.size(); ++i) {
        if (!valid(sim[i], obs[i])) continue;
        mean += obs[i];
        ++n;
    }
    if (n < 2) throw DataError("nse: fewer than 2 valid observations");
    mean /= static_cast<double>(n);
    double err = 0.0, var = 0.0;
    for (std::size_t i = 0; i < obs.size(); ++i) {
        if (!valid(sim[i], obs[i])) continue;
        err += (sim[i] - obs[i]) * (sim[i] - obs[i]);
        var += (obs[i] - mean) * (obs[i] - mean);
    }
    if (var == 0.0) throw DataError("nse: observations have zero variance");
    return 1.0 - err / var;
}

double rmse(std::span<const double> sim, std::span<const double> obs) {
    check_lengths(sim, obs, "rmse");
    double sq = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < obs.size(); ++i) {
        if (!valid(sim[i], obs[i])) continue;
        sq += (sim[i] - obs[i]) * (sim[i] - obs[i]);
        ++n;
    }
    if (n == 0) throw DataError("rmse: no valid pairs");
    return std::sqrt(sq / static_cast<double>(n));
}

double pearson(std::span<const double> x, std::span<const double> y) {
    check_lengths(x, y, "pearson");
    double mx = 0.0, my = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!valid(x[i], y[i])) continue;
        mx += x[i];
        my += y[i];
        ++n;
    }
    if (n < 2) throw DataError("pearson: fewer than 2 valid pairs");
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!valid(x[i], y[i])) continue;
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx == 0.0 || syy == 0.0) throw DataError("pearson: zero variance");
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

double bfi_sim(std::span<const double> q2, std::span<const double> q) {
    check_lengths(q2, q, "bfi_sim");
    double base = 0.0, total = 0.0;
    for (std::size_t i = 0; i < q.size(); ++i) {
        base += q2[i];
        total += q[i];
    }
    if (!(total > 0.0)) throw DataError("bfi_sim: total flow is zero");
    return base / total;
}

double bfi_spatial_correlation(std::span<const double> bfi_sim, std::span<const double> bfi_ref,
                               std::span<const double> nse_per_basin, double nse_threshold) {
    check_lengths(bfi_sim, bfi_ref, "bfi_spatial_correlation");
    if (!nse_per_basin.empty()) check_lengths(bfi_sim, nse_per_basin, "bfi_spatial_correlation");
    std::vector<double> x, y;
    for (std::size_t i = 0; i < bfi_sim.size(); ++i) {
        if (!valid(bfi_sim[i], bfi_ref[i])) continue;
        if (!nse_per_basin.empty() && !(nse_per_basin[i] > nse_threshold)) continue;
        x.push_back(bfi_sim[i]);
        y.push_back(bfi_ref[i]);
    }
    if (x.size() < 3) {
        throw DataError("bfi_spatial_correlation: " + std::to_string(x.size()) + " basins qualify, need at least 3");
    }
    return pearson(x, y);
}

double median(std::vector<double> values) {
    if (values.empty()) throw std::invalid_argument("median: empty input");
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    return n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

}  // namespace dhbv::eval
