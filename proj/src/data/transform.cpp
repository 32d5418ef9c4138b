#include "dhbv/data/transform.hpp"

#include "dhbv/error.hpp"

#include <cmath>
#include <string>

namespace dhbv::data {

double flow_transform(double q) {
    if (q < 0.0) throw DataError("flow_transform: negative flow " + std::to_string(q));
    return std::log10(std::sqrt(q) + 0.1);
}

NormStats compute_stats(std::span<const std::vector<double>> rows, std::size_t n_features) {
    NormStats s;
    s.mean.assign(n_features, 0.0);
    s.std.assign(n_features, 1.0);
    for (std::size_t j = 0; j < n_features; ++j) {
        double sum = 0.0;
        std::size_t n = 0;
        for (const auto& r : rows) {
            if (std::isfinite(r.at(j))) {
                sum += r[j];
                ++n;
            }
        }
        if (n == 0) continue;
        const double mean = sum / static_cast<double>(n);
        double ss = 0.0;
        for (const auto& r : rows)
            if (std::isfinite(r[j])) ss += (r[j] - mean) * (r[j] - mean);
        s.mean[j] = mean;
        s.std[j] = std::max(std::sqrt(ss / static_cast<double>(n)), kStdFloor);
    }
    return s;
}

NormStats compute_stats(std::span<const double> values) {
    std::vector<std::vector<double>> rows;
    rows.reserve(values.size());
    for (double v : values) rows.push_back({v});
    return compute_stats(rows, 1);
}

}  // namespace dhbv::data
