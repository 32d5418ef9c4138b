#include "dhbv/cli/commands.hpp"

#include "dhbv/data/csv.hpp"
#include "dhbv/data/dataset.hpp"
#include "dhbv/data/simulation_io.hpp"
#include "dhbv/data/synthetic.hpp"
#include "dhbv/error.hpp"
#include "dhbv/evaluation/composite.hpp"
#include "dhbv/evaluation/report.hpp"
#include "dhbv/training/checkpoint.hpp"
#include "dhbv/training/model.hpp"
#include "dhbv/training/trainer.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <limits>
#include <thread>

namespace dhbv::cli {

namespace fs = std::filesystem;

namespace {

void require_file(const fs::path& p, const char* what) {
    if (!fs::is_regular_file(p)) throw ConfigError(std::string(what) + " not found: " + p.string());
}

void prepare_out_dir(const fs::path& dir) {
    if (dir.empty()) throw ConfigError("an output directory is required (--out)");
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) throw ConfigError("cannot create output directory " + dir.string());
}

std::vector<std::size_t> select_basins(const data::Dataset& ds, const std::vector<std::string>& ids) {
    std::vector<std::size_t> out;
    if (ids.empty()) {
        for (std::size_t b = 0; b < ds.basins.size(); ++b) out.push_back(b);
        return out;
    }
    for (const auto& id : ids) out.push_back(ds.basin_index(id));
    return out;
}

data::Date parse_flag_date(const std::string& text, const char* flag) {
    try {
        return data::parse_date(text);
    } catch (const DataError& e) {
        throw ConfigError(std::string(flag) + ": " + e.what());
    }
}

}  // namespace

int cmd_validate(const RunConfig& rc, std::ostream& out, std::ostream& err) {
    require_file(rc.manifest, "manifest");
    const auto issues = data::validate_dataset(rc.manifest);
    if (issues.empty()) {
        const auto ds = data::load_dataset(rc.manifest);
        for (const auto& c : ds.coverage) {
            out << c.basin_id << ": " << c.days << " days, " << c.observed << " observed ("
                << data::format_number(std::round(c.fraction() * 1000.0) / 10.0) << "%)\n";
        }
        out << "ok: " << ds.basins.size() << " basins, " << ds.date_at(0).to_string() << " .. "
            << ds.date_at(ds.n_days - 1).to_string() << '\n';
        return kOk;
    }
    for (const auto& issue : issues) {
        err << (issue.basin_id.empty() ? std::string("manifest") : "basin " + issue.basin_id) << ": " << issue.message
            << '\n';
    }
    err << issues.size() << " problem(s) found\n";
    return kDataError;
}

int cmd_synth(const RunConfig& rc, std::ostream& out, std::ostream&) {
    prepare_out_dir(rc.out_dir);
    data::SyntheticConfig sc;
    sc.n_basins = rc.synth_basins;
    sc.n_days = rc.synth_days;
    sc.seed = rc.synth_seed;
    sc.noise_std = rc.synth_noise;
    sc.start = rc.synth_start;
    if (sc.n_basins == 0 || sc.n_days < 2) throw ConfigError("synth needs at least 1 basin and 2 days");
    if (!(sc.noise_std >= 0.0)) throw ConfigError("synth noise must be >= 0");
    const auto synthetic = data::synthesize_dataset(sc);
    const auto manifest = data::write_synthetic(rc.out_dir, synthetic);

    eval::EtReference et;
    for (std::size_t b = 0; b < synthetic.dataset.basins.size(); ++b) {
        const auto truth = synthetic.basin_truth(b);
        et[truth.basin_id] = eval::et_8day_composite(truth.column("E_T"), truth.dates.front());
    }
    eval::write_et_reference(rc.out_dir / kEtReferenceFile, et);
    out << "wrote " << sc.n_basins << " basins x " << sc.n_days << " days: " << manifest.string() << '\n';
    return kOk;
}

int cmd_train(const RunConfig& rc, std::ostream& out, std::ostream&) {
    require_file(rc.manifest, "manifest");
    if (rc.checkpoint) require_file(*rc.checkpoint, "checkpoint");
    rc.training.validate();
    prepare_out_dir(rc.out_dir);
    const auto ds = data::load_dataset(rc.manifest);

    {
        std::ofstream cfg(rc.out_dir / "config.json");
        cfg << train::config_to_json(rc.training).dump(2) << '\n';
    }

    train::TrainOptions options;
    options.out_dir = rc.out_dir;
    options.resume = rc.checkpoint;
    std::size_t epoch = 0, count = 0;
    double sum = 0.0;
    auto flush = [&] {
        if (count) out << "epoch " << epoch << " mean loss " << data::format_number(sum / count) << '\n';
        sum = 0.0;
        count = 0;
    };
    options.on_iteration = [&](const train::TraceRow& row) {
        if (row.epoch != epoch) flush();
        epoch = row.epoch;
        sum += row.loss;
        ++count;
    };
    auto result = train::train_model(ds, rc.training, options);
    flush();
    out << "trained " << rc.training.model << " for " << result.epoch << " epochs; checkpoint "
        << (rc.out_dir / train::kCheckpointFile).string() << '\n';
    return kOk;
}

int cmd_simulate(const RunConfig& rc, std::ostream& out, std::ostream&) {
    if (!rc.checkpoint) throw ConfigError("simulate needs --checkpoint");
    require_file(*rc.checkpoint, "checkpoint");
    require_file(rc.manifest, "manifest");
    prepare_out_dir(rc.out_dir);
    const auto ckpt = train::load_checkpoint(*rc.checkpoint);
    const auto ds = data::load_dataset(rc.manifest, &ckpt.vocabulary);
    const auto basins = select_basins(ds, rc.basins);

    std::size_t begin = 0, end = ds.n_days;
    if (!rc.start || !rc.end) {
        const auto split = train::resolve_split(ckpt.model.config, ds);
        begin = split.test_begin;
        end = split.test_end;
    }
    if (rc.start) begin = ds.day_index(*rc.start);
    if (rc.end) end = ds.day_index(*rc.end) + 1;
    if (begin >= end) throw ConfigError("empty simulation period");

    const auto sims = train::simulate_period(ckpt.model, ckpt.normalization, ds, basins, begin, end);
    for (const auto& s : sims) data::write_simulation_csv(rc.out_dir / (s.basin_id + ".csv"), s);
    out << "simulated " << sims.size() << " basins, " << ds.date_at(begin).to_string() << " .. "
        << ds.date_at(end - 1).to_string() << " -> " << rc.out_dir.string() << '\n';
    return kOk;
}

int cmd_evaluate(const RunConfig& rc, std::ostream& out, std::ostream& err) {
    require_file(rc.manifest, "manifest");
    if (!fs::is_directory(rc.simulations)) throw ConfigError("simulations directory not found: " + rc.simulations.string());
    if (rc.et_reference) require_file(*rc.et_reference, "ET reference");
    prepare_out_dir(rc.out_dir);

    const auto ds = data::load_dataset(rc.manifest);
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(rc.simulations)) {
        if (entry.is_regular_file() && entry.path().extension() == ".csv") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) throw DataError("no simulation CSVs in " + rc.simulations.string());

    std::optional<eval::EtReference> et_ref;
    if (rc.et_reference) et_ref = eval::read_et_reference(*rc.et_reference);

    // Per-basin work is independent; results land by index so output order is fixed.
    std::vector<eval::BasinMetrics> metrics(files.size());
    std::vector<std::vector<std::string>> warnings(files.size());
    std::vector<std::exception_ptr> failures(files.size());
    auto work = [&](std::size_t i) {
        try {
            const std::string id = files[i].stem().string();
            const auto sim = data::read_simulation_csv(files[i], id);
            const auto& basin = ds.basins[ds.basin_index(id)];
            std::optional<double> bfi_ref;
            if (auto it = basin.record.extra.find(rc.bfi_column); it != basin.record.extra.end()) {
                if (!std::isnan(it->second)) bfi_ref = it->second;
            }
            const std::vector<eval::Composite>* et = nullptr;
            if (et_ref) {
                auto it = et_ref->find(id);
                if (it != et_ref->end()) {
                    et = &it->second;
                } else {
                    warnings[i].push_back("basin " + id + ": no ET reference");
                }
            }
            metrics[i] = eval::evaluate_basin(sim, basin.flow, basin.record.latitude, bfi_ref, et, &warnings[i]);
        } catch (...) {
            failures[i] = std::current_exception();
        }
    };
    const std::size_t workers = std::clamp<std::size_t>(rc.threads, 1, files.size());
    {
        std::vector<std::jthread> pool;
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back([&, w] {
                for (std::size_t i = w; i < files.size(); i += workers) work(i);
            });
        }
    }
    for (auto& f : failures) {
        if (f) std::rethrow_exception(f);
    }

    auto summary = eval::summarize(metrics, {.nse_filter = rc.nse_filter});
    std::vector<std::string> all;
    for (auto& w : warnings) all.insert(all.end(), w.begin(), w.end());
    all.insert(all.end(), summary.warnings.begin(), summary.warnings.end());
    summary.warnings = all;
    eval::write_report(rc.out_dir, metrics, summary);

    for (const auto& w : summary.warnings) err << "warning: " << w << '\n';
    out << "basins " << summary.n_basins << ", median NSE " << data::format_number(summary.nse_median) << '\n';
    if (summary.bfi_spatial_r) {
        out << "BFI spatial r " << data::format_number(*summary.bfi_spatial_r) << " over " << summary.bfi_basins
            << " basins" << (summary.nse_filter ? " (NSE > 0.5)" : "") << '\n';
    }
    if (summary.et_r_median) out << "median ET r " << data::format_number(*summary.et_r_median) << '\n';
    return kOk;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Differentiable HBV: train, simulate and evaluate regionalized hydrologic models", "dhbv"};
    app.require_subcommand(1);
    app.fallthrough();
    RunConfig rc;
    app.add_option("--threads", rc.threads, "Worker thread cap")->check(CLI::PositiveNumber);

    auto* validate = app.add_subcommand("validate", "Check a dataset manifest and its files");
    validate->add_option("--manifest", rc.manifest, "Dataset manifest JSON")->required();

    auto* synth = app.add_subcommand("synth", "Generate a seeded synthetic dataset");
    std::string synth_start = "1990-01-01";
    synth->add_option("--out", rc.out_dir, "Output directory")->required();
    synth->add_option("--basins", rc.synth_basins, "Number of basins");
    synth->add_option("--days", rc.synth_days, "Number of days");
    synth->add_option("--seed", rc.synth_seed, "Generator seed");
    synth->add_option("--noise", rc.synth_noise, "Log-normal noise std on observed flow");
    synth->add_option("--start", synth_start, "First date (YYYY-MM-DD)");

    auto* trn = app.add_subcommand("train", "Train a model; flags override the config file");
    std::optional<std::string> model, optimizer, train_start, train_end, test_start, test_end;
    std::optional<std::size_t> batch, window, warmup, epochs, hidden;
    std::optional<double> alpha, lr;
    std::optional<std::uint64_t> seed;
    std::string config_path;
    std::string resume;
    trn->add_option("--manifest", rc.manifest, "Dataset manifest JSON")->required();
    trn->add_option("--out", rc.out_dir, "Output directory")->required();
    trn->add_option("--config", config_path, "Training config JSON");
    trn->add_option("--resume", resume, "Checkpoint to continue from");
    trn->add_option("--model", model, "HBV variant or lstm");
    trn->add_option("--batch-basins", batch);
    trn->add_option("--window", window, "Gradient window days");
    trn->add_option("--warmup", warmup, "Warm-up days");
    trn->add_option("--alpha", alpha, "Loss weight of the transformed term");
    trn->add_option("--epochs", epochs);
    trn->add_option("--lr", lr, "Learning rate");
    trn->add_option("--seed", seed);
    trn->add_option("--hidden", hidden, "LSTM hidden size");
    trn->add_option("--optimizer", optimizer, "adam, adadelta or sgd");
    trn->add_option("--train-start", train_start);
    trn->add_option("--train-end", train_end);
    trn->add_option("--test-start", test_start);
    trn->add_option("--test-end", test_end);

    auto* sim = app.add_subcommand("simulate", "Write per-basin state and flux CSVs");
    std::string checkpoint, start, end;
    sim->add_option("--checkpoint", checkpoint, "Trained checkpoint")->required();
    sim->add_option("--manifest", rc.manifest, "Dataset manifest JSON")->required();
    sim->add_option("--out", rc.out_dir, "Output directory")->required();
    sim->add_option("--basin", rc.basins, "Basin id (repeatable; default all)");
    sim->add_option("--start", start, "First output date; default the test period");
    sim->add_option("--end", end, "Last output date, inclusive");

    auto* ev = app.add_subcommand("evaluate", "Score simulations and write reports");
    std::string et_reference;
    ev->add_option("--simulations", rc.simulations, "Directory of simulation CSVs")->required();
    ev->add_option("--manifest", rc.manifest, "Dataset manifest JSON")->required();
    ev->add_option("--out", rc.out_dir, "Report directory")->required();
    ev->add_option("--bfi-column", rc.bfi_column, "Attribute column holding reference BFI");
    ev->add_option("--et-reference", et_reference, "8-day ET reference CSV");
    ev->add_flag("--nse-filter", rc.nse_filter, "BFI correlation over basins with NSE > 0.5 only");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kOk : kUsageError;
    }

    try {
        if (synth->parsed()) rc.synth_start = parse_flag_date(synth_start, "--start");
        if (trn->parsed()) {
            if (!config_path.empty()) {
                require_file(config_path, "config");
                std::ifstream in(config_path);
                nlohmann::json j;
                try {
                    j = nlohmann::json::parse(in);
                } catch (const nlohmann::json::exception& e) {
                    throw ConfigError(config_path + ": " + e.what());
                }
                rc.training = train::config_from_json(j);
            }
            auto& t = rc.training;
            if (model) t.model = *model;
            if (batch) t.batch_basins = *batch;
            if (window) t.window_days = *window;
            if (warmup) t.warmup_days = *warmup;
            if (alpha) t.alpha = *alpha;
            if (epochs) t.epochs = *epochs;
            if (lr) t.learning_rate = *lr;
            if (seed) t.seed = *seed;
            if (hidden) t.hidden = *hidden;
            if (optimizer) t.optimizer = train::parse_optimizer(*optimizer);
            if (train_start) t.train_start = parse_flag_date(*train_start, "--train-start");
            if (train_end) t.train_end = parse_flag_date(*train_end, "--train-end");
            if (test_start) t.test_start = parse_flag_date(*test_start, "--test-start");
            if (test_end) t.test_end = parse_flag_date(*test_end, "--test-end");
            t.validate();
            if (!resume.empty()) rc.checkpoint = resume;
        }
        if (sim->parsed()) {
            rc.checkpoint = checkpoint;
            if (!start.empty()) rc.start = parse_flag_date(start, "--start");
            if (!end.empty()) rc.end = parse_flag_date(end, "--end");
        }
        if (ev->parsed() && !et_reference.empty()) rc.et_reference = et_reference;

        if (validate->parsed()) return cmd_validate(rc, out, err);
        if (synth->parsed()) return cmd_synth(rc, out, err);
        if (trn->parsed()) return cmd_train(rc, out, err);
        if (sim->parsed()) return cmd_simulate(rc, out, err);
        return cmd_evaluate(rc, out, err);
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << '\n';
        return kUsageError;
    } catch (const DataError& e) {
        err << "data error: " << e.what() << '\n';
        return kDataError;
    } catch (const NumericsError& e) {
        err << "numerics error: " << e.what() << '\n';
        return kRuntimeError;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kRuntimeError;
    }
}

}  // namespace dhbv::cli
