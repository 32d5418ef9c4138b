#pragma once

#include "dhbv/data/calendar.hpp"
#include "dhbv/training/config.hpp"

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace dhbv::cli {

enum ExitCode : int { kOk = 0, kUsageError = 1, kDataError = 2, kRuntimeError = 3 };

inline constexpr std::string_view kEtReferenceFile = "et_reference.csv";
inline constexpr std::string_view kReportDir = "report";

/// Every option any subcommand reads; each command uses its own subset.
struct RunConfig {
    std::filesystem::path manifest;
    std::filesystem::path out_dir;
    std::optional<std::filesystem::path> config_file;  // TrainingConfig JSON
    train::TrainingConfig training;
    std::optional<std::filesystem::path> checkpoint;    // simulate input, or train --resume
    std::filesystem::path simulations;                   // evaluate input directory
    std::vector<std::string> basins;                     // empty = all
    std::optional<data::Date> start;                     // simulate period, inclusive
    std::optional<data::Date> end;
    std::string bfi_column = "bfi_ref";
    std::optional<std::filesystem::path> et_reference;
    bool nse_filter = false;
    std::size_t threads = 1;

    // synth
    std::size_t synth_basins = 20;
    std::size_t synth_days = 2192;
    std::uint64_t synth_seed = 1;
    double synth_noise = 0.0;
    data::Date synth_start{1990, 1, 1};
};

/// Runs every load-time check; prints issues per basin. Exit 0 iff clean.
int cmd_validate(const RunConfig& rc, std::ostream& out, std::ostream& err);

/// Writes a synthetic dataset (with truth/ and the ET reference) under out_dir.
int cmd_synth(const RunConfig& rc, std::ostream& out, std::ostream& err);

/// Trains rc.training on the manifest; writes checkpoint, loss trace and config.json under out_dir.
int cmd_train(const RunConfig& rc, std::ostream& out, std::ostream& err);

/**
 * Writes <out_dir>/<basin>.csv for the requested basins. The period defaults
 * to the checkpoint's test split; warm-up days precede it and are not written.
 */
int cmd_simulate(const RunConfig& rc, std::ostream& out, std::ostream& err);

/// Scores <simulations>/*.csv against the manifest's flow; writes the report under out_dir.
int cmd_evaluate(const RunConfig& rc, std::ostream& out, std::ostream& err);

/// Parses arguments, dispatches, and maps exceptions onto exit codes.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace dhbv::cli
