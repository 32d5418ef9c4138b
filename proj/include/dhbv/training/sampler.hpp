#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace dhbv::train {

/// One minibatch member: basin index and the first day of its loss window.
/// Its warm-up covers [start - warmup_days, start).
struct Sample {
    std::size_t basin = 0;
    std::size_t start = 0;

    bool operator==(const Sample&) const = default;
};

struct SamplerSpec {
    std::size_t n_basins = 0;
    std::size_t period_begin = 0;  // training period [begin, end) on the day axis
    std::size_t period_end = 0;
    std::size_t warmup_days = 0;
    std::size_t window_days = 0;
    std::size_t batch = 0;
};

/**
 * Draws `batch` samples. Basins are distinct when there are at least
 * `batch` of them and drawn with replacement otherwise; each start is
 * uniform over the positions that keep warm-up and window inside the period.
 */
std::vector<Sample> sample_minibatch(const SamplerSpec& spec, std::mt19937_64& rng);

/// Iterations per epoch: ceil(n_basins * train_days / (batch * window_days)).
std::size_t iterations_per_epoch(std::size_t n_basins, std::size_t train_days, std::size_t batch,
                                 std::size_t window_days);

}  // namespace dhbv::train
