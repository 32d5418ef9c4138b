#pragma once

#include "dhbv/data/dataset.hpp"
#include "dhbv/training/checkpoint.hpp"
#include "dhbv/training/config.hpp"

#include <filesystem>
#include <functional>
#include <optional>

namespace dhbv::train {

inline constexpr std::string_view kCheckpointFile = "checkpoint.json";
inline constexpr std::string_view kTraceFile = "loss_trace.csv";

struct TrainOptions {
    /// Receives checkpoint.json and loss_trace.csv after every epoch; empty = keep in memory only.
    std::filesystem::path out_dir;
    /// Continue from this checkpoint; its configuration must match except for `epochs`.
    std::optional<std::filesystem::path> resume;
    /// Called after every iteration.
    std::function<void(const TraceRow&)> on_iteration;
};

/**
 * Minibatch training. Each iteration samples (basin, window) pairs, runs
 * g_A over warm-up plus window, spins up storages on plain values, simulates
 * and routes the window on the tape, applies the composite loss and takes
 * one clipped optimizer step. Non-finite losses or gradients raise
 * NumericsError naming the iteration and the batch's basins.
 */
Checkpoint train_model(const data::Dataset& ds, const TrainingConfig& config, const TrainOptions& options = {});

/// Loss of the current model on one fixed batch (no update); `warm` as in batch_loss.
LossTerms<Tensor> evaluate_batch_loss(const Model& model, const Normalization& norm, const BatchData& batch,
                                      const WarmStart* warm = nullptr);

}  // namespace dhbv::train
