#include "dhbv/training/sampler.hpp"

#include "dhbv/error.hpp"

#include <numeric>
#include <string>

namespace dhbv::train {

std::vector<Sample> sample_minibatch(const SamplerSpec& s, std::mt19937_64& rng) {
    if (s.n_basins == 0) throw DataError("sample_minibatch: no basins");
    if (s.batch == 0) throw ConfigError("sample_minibatch: batch size must be >= 1");
    const std::size_t first = s.period_begin + s.warmup_days;
    if (s.period_end < s.period_begin || first + s.window_days > s.period_end) {
        throw DataError("sample_minibatch: no valid window; warm-up " + std::to_string(s.warmup_days) + " + window " +
                        std::to_string(s.window_days) + " days exceed the " +
                        std::to_string(s.period_end - std::min(s.period_end, s.period_begin)) + "-day period");
    }
    const std::size_t last = s.period_end - s.window_days;

    std::vector<std::size_t> basins(s.batch);
    if (s.n_basins >= s.batch) {
        // Partial Fisher-Yates: the first `batch` entries of a shuffled index list.
        std::vector<std::size_t> pool(s.n_basins);
        std::iota(pool.begin(), pool.end(), std::size_t{0});
        for (std::size_t i = 0; i < s.batch; ++i) {
            std::uniform_int_distribution<std::size_t> pick(i, s.n_basins - 1);
            std::swap(pool[i], pool[pick(rng)]);
            basins[i] = pool[i];
        }
    } else {
        std::uniform_int_distribution<std::size_t> pick(0, s.n_basins - 1);
        for (auto& b : basins) b = pick(rng);
    }
    std::uniform_int_distribution<std::size_t> start(first, last);
    std::vector<Sample> out(s.batch);
    for (std::size_t i = 0; i < s.batch; ++i) out[i] = {basins[i], start(rng)};
    return out;
}

std::size_t iterations_per_epoch(std::size_t n_basins, std::size_t train_days, std::size_t batch,
                                 std::size_t window_days) {
    if (batch == 0 || window_days == 0) throw ConfigError("iterations_per_epoch: batch and window must be >= 1");
    const std::size_t exposure = n_basins * train_days;
    const std::size_t per_iter = batch * window_days;
    return std::max<std::size_t>(1, (exposure + per_iter - 1) / per_iter);
}

}  // namespace dhbv::train
