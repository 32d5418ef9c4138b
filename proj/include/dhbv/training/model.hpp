#pragma once

#include "dhbv/data/dataset.hpp"
#include "dhbv/data/simulation_io.hpp"
#include "dhbv/data/transform.hpp"
#include "dhbv/hbv/model.hpp"
#include "dhbv/neural/param_net.hpp"
#include "dhbv/neural/streamflow_lstm.hpp"
#include "dhbv/training/config.hpp"
#include "dhbv/training/loss.hpp"
#include "dhbv/training/sampler.hpp"

#include <optional>
#include <vector>

namespace dhbv::train {

/// Forcing features seen by the networks, in column order.
inline constexpr std::size_t kForcingFeatures = 3;  // prcp, tmean, pet

/// Z-score statistics from the training split.
struct Normalization {
    data::NormStats attributes;  // kAttributeCount features
    data::NormStats forcing;     // kForcingFeatures features
    data::NormStats target;      // transformed flow; used by the benchmark LSTM
};

/// Statistics over all basins for days [split.train_begin, split.train_end).
Normalization compute_normalization(const data::Dataset& ds, const Split& split);

/**
 * Days gathered for a set of samples. Day k of member i is dataset day
 * samples[i].start - warmup + k; the first `warmup` days spin up storages.
 */
struct BatchData {
    std::vector<std::size_t> basins;
    std::size_t warmup = 0;
    std::size_t window = 0;
    std::vector<hbv::DayForcing> forcing;  // raw, per day [B x 1]
    std::vector<Tensor> inputs;            // normalized [B x (3 + 35)] per day
    std::vector<Tensor> observed;          // window days only, [B x 1], NaN where missing

    std::size_t batch() const { return basins.size(); }
    std::size_t days() const { return warmup + window; }
};

BatchData assemble_batch(const data::Dataset& ds, const Normalization& norm, const std::vector<Sample>& samples,
                         std::size_t warmup, std::size_t window);

/// A trainable model: g_A (plus NN_r for delta_nnr) driving HBV, or the benchmark LSTM.
struct Model {
    TrainingConfig config;
    hbv::ParameterRanges ranges;
    nn::ParamNet param_net;
    std::optional<nn::NnrNet> nnr;
    std::optional<nn::StreamflowLstm> streamflow;

    /// Seeded initialization from config.seed.
    static Model create(const TrainingConfig& config);
    /// Named weights in a fixed order; pointers stay valid while the model lives.
    nn::ParameterList parameters();
};

/// Storages at the end of a batch's warm-up, plus the runoff history routing needs.
struct WarmStart {
    hbv::State<Tensor> state;
    std::vector<Tensor> runoff;  // last min(warmup, max_lag - 1) warm-up days, oldest first
};

/// Plain-value warm-up of an HBV model over the batch's first `warmup` days.
WarmStart spin_up(const Model& model, const BatchData& batch);

/**
 * Builds the training loss of one batch on the binder's tape. The warm-up is
 * run on plain values unless `warm` supplies it; either way no gradient flows
 * into the starting storages.
 */
LossTerms<Variable> batch_loss(const Model& model, const BatchData& batch, const Normalization& norm,
                               nn::TapeBinder& binder, const WarmStart* warm = nullptr);

/// Plain-value run over every day of a batch (warm-up included).
struct SimulationResult {
    std::vector<hbv::DayForcing> forcing;
    hbv::Rollout<Tensor> rollout;        // empty for the benchmark LSTM
    std::vector<Tensor> routed;          // simulated streamflow per day, [B x 1]
    hbv::HbvParams<Tensor> params;
    hbv::DynamicParams<Tensor> dynamic;  // indexed like `forcing`
};

SimulationResult simulate_batch(const Model& model, const BatchData& batch, const Normalization& norm);

/**
 * Simulates dataset basins over days [begin, end) after a warm-up of up to
 * config.warmup_days (shortened when the record starts later). Returns one
 * BasinSimulation per basin covering only [begin, end).
 */
std::vector<data::BasinSimulation> simulate_period(const Model& model, const Normalization& norm,
                                                   const data::Dataset& ds, const std::vector<std::size_t>& basins,
                                                   std::size_t begin, std::size_t end);

/// Benchmark LSTM output back in flow units (mm/day), from a normalized transformed value.
double lstm_output_to_flow(double z, const Normalization& norm);

}  // namespace dhbv::train
