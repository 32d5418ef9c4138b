#pragma once

#include "dhbv/data/dataset.hpp"
#include "dhbv/data/simulation_io.hpp"
#include "dhbv/hbv/model.hpp"

#include <cstdint>
#include <filesystem>
#include <vector>

namespace dhbv::data {

struct SyntheticConfig {
    std::size_t n_basins = 20;
    std::size_t n_days = 2192;  // six years from 1990-01-01
    std::uint64_t seed = 1;
    Date start{1990, 1, 1};
    /// Standard deviation of multiplicative log-normal noise on observed flow; 0 = noise-free.
    double noise_std = 0.0;
    std::size_t max_lag = 15;
};

/// Ground truth behind a synthetic dataset.
struct SyntheticTruth {
    hbv::HbvParams<ad::Tensor> params;      // [B x 1] per parameter
    hbv::DynamicParams<ad::Tensor> dynamic;  // daily beta and gamma actually used
    std::vector<hbv::DayForcing> forcing;
    hbv::Rollout<ad::Tensor> rollout;
    std::vector<ad::Tensor> routed;  // noise-free Q_routed per day
};

struct SyntheticData {
    Dataset dataset;
    SyntheticTruth truth;

    /// Truth simulation of one basin over the whole record.
    BasinSimulation basin_truth(std::size_t basin) const;
};

/**
 * Seeded synthetic basins. Six latent factors drive the forcing climate,
 * the 35 attributes and the true parameters; the truth model is the
 * delta HBV with daily gamma (a smooth function of a 30-day temperature
 * average) and daily beta (a function of the previous day's soil wetness).
 * Observed flow is the routed truth, optionally with noise. The extra
 * attribute column "bfi_ref" holds the true sum(Q2)/sum(Q) over the record.
 */
SyntheticData synthesize_dataset(const SyntheticConfig& config);

/// Dataset files plus truth/<basin>.csv in simulation format. Returns the manifest path.
std::filesystem::path write_synthetic(const std::filesystem::path& dir, const SyntheticData& data);

/// Builds the batched forcing for basins `basins` over days [begin, end).
std::vector<hbv::DayForcing> batch_forcing(const Dataset& ds, const std::vector<std::size_t>& basins,
                                           std::size_t begin, std::size_t end);

}  // namespace dhbv::data
