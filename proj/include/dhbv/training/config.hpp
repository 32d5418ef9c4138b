#pragma once

#include "dhbv/data/dataset.hpp"
#include "dhbv/hbv/params.hpp"

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace dhbv::train {

enum class OptimizerKind : std::uint8_t { Adam, Adadelta, Sgd };

std::string_view optimizer_name(OptimizerKind k);
OptimizerKind parse_optimizer(std::string_view name);

/// Model names accepted by `TrainingConfig::model`: every HBV variant name plus "lstm".
inline constexpr std::string_view kLstmModelName = "lstm";

struct TrainingConfig {
    std::string model = "delta_gamma_beta_t";
    std::size_t batch_basins = 100;
    std::size_t window_days = 365;
    std::size_t warmup_days = 365;
    double alpha = 0.25;
    std::size_t epochs = 50;
    double learning_rate = 1e-3;
    std::uint64_t seed = 0;
    std::size_t hidden = 256;
    OptimizerKind optimizer = OptimizerKind::Adam;
    double clip_norm = 1.0;  // global gradient norm; <= 0 disables clipping
    std::size_t max_lag = 15;
    std::vector<std::size_t> nnr_hidden{16, 16};
    // Inclusive ISO dates; unset bounds default to the dataset record.
    std::optional<data::Date> train_start;
    std::optional<data::Date> train_end;
    std::optional<data::Date> test_start;
    std::optional<data::Date> test_end;

    bool is_lstm() const { return model == kLstmModelName; }
    /// Throws ConfigError for the benchmark LSTM.
    hbv::Variant variant() const;
    /// Throws ConfigError on any out-of-range field.
    void validate() const;
};

/// Unknown keys and wrongly typed values are ConfigErrors.
TrainingConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const TrainingConfig& c);

/// Day ranges [begin, end) on a dataset's common axis.
struct Split {
    std::size_t train_begin = 0;
    std::size_t train_end = 0;
    std::size_t test_begin = 0;
    std::size_t test_end = 0;

    std::size_t train_days() const { return train_end - train_begin; }
};

/**
 * Resolves the configured periods against `ds`. The training period must
 * hold at least one warm-up plus window; the test period defaults to the
 * days after training, and to the whole record when training covers it.
 */
Split resolve_split(const TrainingConfig& c, const data::Dataset& ds);

}  // namespace dhbv::train
