#pragma once

#include "dhbv/data/dataset.hpp"
#include "dhbv/training/model.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace dhbv::train {

inline constexpr std::string_view kCheckpointFormat = "dhbv-checkpoint";
inline constexpr int kCheckpointVersion = 1;

/// One row of the loss trace.
struct TraceRow {
    std::size_t iteration = 0;  // 1-based, global across epochs
    std::size_t epoch = 0;      // 1-based
    double loss = 0.0;
    double plain = 0.0;
    double transformed = 0.0;

    bool operator==(const TraceRow&) const = default;
};

/**
 * Everything needed to resume training or run inference: weights,
 * normalization statistics, the categorical vocabulary, the configuration,
 * progress, optimizer state and the sampler RNG state.
 */
struct Checkpoint {
    Model model;
    Normalization normalization;
    data::Vocabulary vocabulary;
    std::size_t epoch = 0;  // completed epochs
    std::vector<TraceRow> trace;
    nlohmann::json optimizer = nlohmann::json::object();
    std::string rng_state;
};

nlohmann::json checkpoint_to_json(Checkpoint& c);
/// Throws ConfigError on a foreign or incompatible file.
Checkpoint checkpoint_from_json(const nlohmann::json& j);

/// Compact JSON; identical checkpoints serialize to identical bytes.
void save_checkpoint(const std::filesystem::path& path, Checkpoint& c);
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// Loss trace CSV with columns iteration, epoch, loss, plain, transformed.
void write_trace_csv(const std::filesystem::path& path, const std::vector<TraceRow>& trace);
std::vector<TraceRow> read_trace_csv(const std::filesystem::path& path);

}  // namespace dhbv::train
