#include "dhbv/training/trainer.hpp"

#include "dhbv/error.hpp"
#include "dhbv/training/optimizer.hpp"
#include "dhbv/training/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace dhbv::train {

namespace {

constexpr int kMaxResamples = 100;

std::string basin_list(const data::Dataset& ds, const std::vector<Sample>& samples) {
    std::string s;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        if (i) s += ",";
        s += ds.basins[samples[i].basin].record.id;
    }
    return s;
}

void check_resume_compatible(const TrainingConfig& saved, const TrainingConfig& requested) {
    auto a = config_to_json(saved), b = config_to_json(requested);
    a.erase("epochs");
    b.erase("epochs");
    if (a != b) {
        throw ConfigError("resume checkpoint was trained with a different configuration: " + a.dump() + " vs " +
                          b.dump());
    }
}

OptimizerSettings settings_for(const TrainingConfig& c) {
    OptimizerSettings s;
    s.kind = c.optimizer;
    s.learning_rate = c.learning_rate;
    return s;
}

}  // namespace

LossTerms<Tensor> evaluate_batch_loss(const Model& model, const Normalization& norm, const BatchData& batch,
                                      const WarmStart* warm) {
    ad::Tape tape;
    nn::TapeBinder binder(tape);
    const auto l = batch_loss(model, batch, norm, binder, warm);
    return {l.total.value(), l.plain, l.transformed};
}

Checkpoint train_model(const data::Dataset& ds, const TrainingConfig& config, const TrainOptions& options) {
    config.validate();
    const Split split = resolve_split(config, ds);

    Checkpoint ck;
    std::mt19937_64 rng(config.seed);
    Optimizer opt(settings_for(config));
    if (options.resume) {
        ck = load_checkpoint(*options.resume);
        check_resume_compatible(ck.model.config, config);
        ck.model.config.epochs = config.epochs;
        if (ck.vocabulary != ds.vocabulary) throw DataError("dataset vocabulary differs from the checkpoint's");
        std::istringstream in(ck.rng_state);
        in >> rng;
        if (in.fail()) throw ConfigError("checkpoint RNG state is corrupt");
        opt.load_state(ck.optimizer, ck.model.parameters());
    } else {
        ck.model = Model::create(config);
        ck.normalization = compute_normalization(ds, split);
        ck.vocabulary = ds.vocabulary;
    }

    auto params = ck.model.parameters();
    const SamplerSpec spec{ds.basins.size(), split.train_begin, split.train_end, config.warmup_days,
                           config.window_days, config.batch_basins};
    const std::size_t per_epoch =
        iterations_per_epoch(ds.basins.size(), split.train_days(), config.batch_basins, config.window_days);

    for (std::size_t epoch = ck.epoch + 1; epoch <= config.epochs; ++epoch) {
        for (std::size_t k = 0; k < per_epoch; ++k) {
            const std::size_t iteration = (epoch - 1) * per_epoch + k + 1;
            std::vector<Sample> samples;
            BatchData batch;
            for (int attempt = 0;; ++attempt) {
                samples = sample_minibatch(spec, rng);
                batch = assemble_batch(ds, ck.normalization, samples, config.warmup_days, config.window_days);
                const bool observed = std::ranges::any_of(batch.observed, [](const Tensor& day) {
                    return std::ranges::any_of(day.values(), [](double v) { return std::isfinite(v); });
                });
                if (observed) break;
                if (attempt + 1 == kMaxResamples) {
                    throw DataError("no observed streamflow in " + std::to_string(kMaxResamples) +
                                    " consecutive minibatches");
                }
            }
            const auto context = [&] {
                return "iteration " + std::to_string(iteration) + " (epoch " + std::to_string(epoch) +
                       "), basins " + basin_list(ds, samples);
            };

            ad::Tape tape;
            nn::TapeBinder binder(tape);
            TraceRow row{iteration, epoch, 0.0, 0.0, 0.0};
            std::vector<Tensor> grads;
            try {
                const auto loss = batch_loss(ck.model, batch, ck.normalization, binder);
                row.loss = loss.total.value().item();
                row.plain = loss.plain;
                row.transformed = loss.transformed;
                if (!std::isfinite(row.loss)) throw NumericsError("non-finite loss");
                grads = nn::collect_gradients(params, binder, tape.backward(loss.total));
                check_gradients(params, grads);
            } catch (const NumericsError& e) {
                throw NumericsError(std::string(e.what()) + " at " + context());
            }
            clip_global_norm(grads, config.clip_norm);
            opt.step(params, grads);
            ck.trace.push_back(row);
            if (options.on_iteration) options.on_iteration(row);
        }
        ck.epoch = epoch;
        ck.optimizer = opt.state_json();
        std::ostringstream rs;
        rs << rng;
        ck.rng_state = rs.str();
        if (!options.out_dir.empty()) {
            save_checkpoint(options.out_dir / kCheckpointFile, ck);
            write_trace_csv(options.out_dir / kTraceFile, ck.trace);
        }
    }
    if (ck.rng_state.empty()) {
        std::ostringstream rs;
        rs << rng;
        ck.rng_state = rs.str();
        ck.optimizer = opt.state_json();
    }
    return ck;
}

}  // namespace dhbv::train
