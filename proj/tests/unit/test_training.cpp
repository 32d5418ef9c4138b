#include "doctest.h"

#include "dhbv/autodiff/gradcheck.hpp"
#include "dhbv/data/synthetic.hpp"
#include "dhbv/error.hpp"
#include "dhbv/training/checkpoint.hpp"
#include "dhbv/training/optimizer.hpp"
#include "dhbv/training/sampler.hpp"
#include "dhbv/training/trainer.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <random>
#include <set>

using namespace dhbv;
using namespace dhbv::train;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("dhbv_test_training_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

const data::SyntheticData& small_twin() {
    static const data::SyntheticData syn = [] {
        data::SyntheticConfig c;
        c.n_basins = 4;
        c.n_days = 400;
        c.seed = 3;
        return data::synthesize_dataset(c);
    }();
    return syn;
}

TrainingConfig small_config(const std::string& model) {
    TrainingConfig c;
    c.model = model;
    c.batch_basins = 3;
    c.window_days = 60;
    c.warmup_days = 30;
    c.hidden = 6;
    c.epochs = 2;
    c.seed = 5;
    c.learning_rate = 5e-3;
    c.nnr_hidden = {4};
    c.train_end = small_twin().dataset.date_at(299);
    return c;
}

std::vector<Tensor> column_days(std::initializer_list<std::initializer_list<double>> per_day) {
    std::vector<Tensor> out;
    for (auto d : per_day) out.push_back(Tensor::column(std::vector<double>(d)));
    return out;
}

}  // namespace

TEST_SUITE("training") {

TEST_CASE("config parsing and validation") {
    const TrainingConfig d;
    CHECK(d.batch_basins == 100);
    CHECK(d.window_days == 365);
    CHECK(d.warmup_days == 365);
    CHECK(d.alpha == 0.25);
    CHECK(d.hidden == 256);
    CHECK(d.optimizer == OptimizerKind::Adam);

    auto j = config_to_json(small_config("delta_beta_t"));
    const auto back = config_from_json(j);
    CHECK(config_to_json(back) == j);
    CHECK(back.variant() == hbv::Variant::DeltaBetaT);

    CHECK_THROWS_AS(config_from_json({{"alpha", 1.5}}), ConfigError);
    CHECK_THROWS_AS(config_from_json({{"alpha", -0.1}}), ConfigError);
    CHECK_THROWS_AS(config_from_json({{"alhpa", 0.5}}), ConfigError);
    CHECK_THROWS_AS(config_from_json({{"optimizer", "rmsprop"}}), ConfigError);
    CHECK_THROWS_AS(config_from_json({{"model", "hbv96"}}), ConfigError);
    CHECK_THROWS_AS(config_from_json({{"epochs", "ten"}}), ConfigError);
    CHECK_THROWS_AS(config_from_json({{"train_start", "2001-02-30"}}), ConfigError);
    CHECK(config_from_json({{"model", "lstm"}}).is_lstm());
    CHECK(config_from_json({{"optimizer", "adadelta"}}).optimizer == OptimizerKind::Adadelta);
}

TEST_CASE("split resolution") {
    const auto& ds = small_twin().dataset;
    auto c = small_config("delta");
    const auto s = resolve_split(c, ds);
    CHECK(s.train_begin == 0);
    CHECK(s.train_end == 300);
    CHECK(s.test_begin == 300);
    CHECK(s.test_end == 400);
    c.train_end.reset();
    const auto whole = resolve_split(c, ds);
    CHECK(whole.train_end == 400);
    CHECK(whole.test_begin == 0);
    c.warmup_days = 365;
    CHECK_THROWS_AS(resolve_split(c, ds), ConfigError);
    c = small_config("delta");
    c.test_end = data::Date{2030, 1, 1};
    CHECK_THROWS_AS(resolve_split(c, ds), ConfigError);
}

TEST_CASE("composite loss hand case") {
    const auto sim = column_days({{2.0}, {2.0}});
    const auto target = make_target(column_days({{1.0}, {4.0}}));
    const auto l = compute_loss(sim, target, 0.25);
    CHECK(std::abs(l.plain - 1.5811388300841898) < 1e-12);
    CHECK(std::abs(l.transformed - 0.1404226365776355) < 1e-12);
    CHECK(std::abs(l.total.item() - 1.220959781707551) < 1e-12);
    CHECK(std::abs(compute_loss(sim, target, 0.0).total.item() - l.plain) < 1e-15);
    CHECK(std::abs(compute_loss(sim, target, 1.0).total.item() - l.transformed) < 1e-15);
}

TEST_CASE("loss masking and degenerate cases") {
    const double nan = std::nan("");
    // Masked entries drop out of sums and denominators.
    const auto sim = column_days({{2.0, 100.0}, {2.0, 5.0}});
    const auto masked = compute_loss(sim, make_target(column_days({{1.0, nan}, {4.0, nan}})), 0.25);
    CHECK(std::abs(masked.total.item() - 1.220959781707551) < 1e-12);
    const auto target = make_target(column_days({{1.0, nan}, {nan, 3.0}}));
    CHECK(target.valid == 2);
    const auto l = compute_loss(sim, target, 0.0);
    CHECK(std::abs(l.plain - std::sqrt((1.0 + 4.0) / 2.0)) < 1e-12);

    const auto same = compute_loss(column_days({{1.0, 2.0}}), make_target(column_days({{1.0, 2.0}})), 0.25);
    CHECK(same.total.item() < 1e-12);
    CHECK_THROWS_AS(compute_loss(sim, make_target(column_days({{nan, nan}, {nan, nan}})), 0.25), DataError);
    CHECK_THROWS_AS(compute_loss(sim, make_target(column_days({{1.0, 1.0}})), 0.25), std::invalid_argument);
    CHECK_THROWS_AS(compute_loss(sim, make_target(column_days({{1.0, 2.0}, {1.0, 2.0}})), 1.2), ConfigError);
}

TEST_CASE("loss is linear in alpha and differentiable in the simulation") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0.05, 8.0);
    for (int rep = 0; rep < 20; ++rep) {
        std::vector<Tensor> sim, obs;
        for (int t = 0; t < 6; ++t) {
            sim.push_back(Tensor::column({u(rng), u(rng), u(rng)}));
            obs.push_back(Tensor::column({u(rng), rep % 3 == 0 && t == 2 ? std::nan("") : u(rng), u(rng)}));
        }
        const auto target = make_target(obs);
        const double alpha = 0.05 * rep;
        const auto l = compute_loss(sim, target, alpha);
        const double plain = compute_loss(sim, target, 0.0).total.item();
        const double trans = compute_loss(sim, target, 1.0).total.item();
        CHECK(std::abs(l.total.item() - ((1 - alpha) * plain + alpha * trans)) < 1e-12);

        auto fn = [&](ad::Tape&, const std::vector<Variable>& in) { return compute_loss(in, target, alpha).total; };
        CHECK(ad::gradcheck(fn, sim).max_rel_error < 1e-5);
    }
}

TEST_CASE("optimizer updates") {
    Tensor w = Tensor::row({1.0, -2.0});
    nn::ParameterList params{{"w", &w}};
    SUBCASE("zero gradient leaves weights unchanged") {
        for (auto kind : {OptimizerKind::Adam, OptimizerKind::Adadelta, OptimizerKind::Sgd}) {
            Optimizer opt({.kind = kind, .learning_rate = 0.1});
            for (int i = 0; i < 5; ++i) opt.step(params, {Tensor(1, 2, 0.0)});
            CHECK(w == Tensor::row({1.0, -2.0}));
        }
    }
    SUBCASE("adam first step is lr times the gradient sign") {
        Optimizer opt({.kind = OptimizerKind::Adam, .learning_rate = 0.1});
        opt.step(params, {Tensor::row({0.5, -4.0})});
        CHECK(w[0] == doctest::Approx(0.9).epsilon(1e-7));
        CHECK(w[1] == doctest::Approx(-1.9).epsilon(1e-7));
        CHECK(opt.steps() == 1);
    }
    SUBCASE("sgd step") {
        Optimizer opt({.kind = OptimizerKind::Sgd, .learning_rate = 0.5});
        opt.step(params, {Tensor::row({1.0, 1.0})});
        CHECK(w == Tensor::row({0.5, -2.5}));
    }
    SUBCASE("non-finite gradient names the parameter") {
        Optimizer opt;
        try {
            opt.step(params, {Tensor::row({1.0, std::nan("")})});
            FAIL("expected NumericsError");
        } catch (const NumericsError& e) {
            CHECK(std::string(e.what()).find("w") != std::string::npos);
        }
        CHECK(w == Tensor::row({1.0, -2.0}));
    }
}

TEST_CASE("optimizers minimise a scalar quadratic within 200 steps") {
    for (auto [kind, lr] : std::vector<std::pair<OptimizerKind, double>>{
             {OptimizerKind::Adam, 0.1}, {OptimizerKind::Sgd, 0.1}, {OptimizerKind::Adadelta, 20.0}}) {
        Tensor w = Tensor::scalar(-4.0);
        nn::ParameterList params{{"w", &w}};
        Optimizer opt({.kind = kind, .learning_rate = lr});
        for (int i = 0; i < 200; ++i) opt.step(params, {Tensor::scalar(2.0 * (w.item() - 3.0))});
        CHECK(std::abs(w.item() - 3.0) < 1e-2);
    }
}

TEST_CASE("global norm clipping") {
    std::vector<Tensor> g{Tensor::row({3.0}), Tensor::row({4.0})};
    CHECK(clip_global_norm(g, 1.0) == doctest::Approx(5.0));
    CHECK(g[0].item() == doctest::Approx(0.6));
    CHECK(g[1].item() == doctest::Approx(0.8));
    std::vector<Tensor> small{Tensor::row({0.3, 0.4})};
    clip_global_norm(small, 1.0);
    CHECK(small[0] == Tensor::row({0.3, 0.4}));
    std::vector<Tensor> off{Tensor::row({30.0})};
    clip_global_norm(off, 0.0);
    CHECK(off[0].item() == 30.0);
}

TEST_CASE("optimizer state round-trips through JSON") {
    Tensor a = Tensor::row({1.0, 2.0}), b = Tensor::row({0.0, 0.5});
    Tensor a2 = a, b2 = b;
    nn::ParameterList p1{{"w", &a}}, p2{{"w", &b}};
    Optimizer o1, o2;
    for (int i = 0; i < 3; ++i) o1.step(p1, {Tensor::row({0.1 * i, -0.3})});
    o2.load_state(o1.state_json(), p2);
    CHECK(o2.steps() == 3);
    b = a;
    o1.step(p1, {Tensor::row({0.2, 0.2})});
    o2.step(p2, {Tensor::row({0.2, 0.2})});
    CHECK(a == b);
    Optimizer sgd({.kind = OptimizerKind::Sgd});
    CHECK_THROWS_AS(sgd.load_state(o1.state_json(), p1), ConfigError);
    (void)a2;
    (void)b2;
}

TEST_CASE("minibatch sampling") {
    SamplerSpec spec{671, 0, 5479, 365, 365, 100};
    std::mt19937_64 rng(1);
    for (int rep = 0; rep < 20; ++rep) {
        const auto batch = sample_minibatch(spec, rng);
        REQUIRE(batch.size() == 100);
        std::set<std::size_t> distinct;
        for (const auto& s : batch) {
            CHECK(s.basin < 671);
            CHECK(s.start >= 365);
            CHECK(s.start + 365 <= 5479);
            distinct.insert(s.basin);
        }
        CHECK(distinct.size() == 100);
    }
    SamplerSpec toy{2, 10, 50, 10, 20, 100};
    const auto batch = sample_minibatch(toy, rng);
    CHECK(batch.size() == 100);
    for (const auto& s : batch) CHECK((s.basin < 2 && s.start >= 20 && s.start <= 30));

    std::mt19937_64 r1(9), r2(9);
    for (int i = 0; i < 5; ++i) CHECK(sample_minibatch(spec, r1) == sample_minibatch(spec, r2));

    CHECK_THROWS_AS(sample_minibatch({2, 0, 30, 20, 20, 4}, rng), DataError);
    CHECK_THROWS_AS(sample_minibatch({0, 0, 300, 20, 20, 4}, rng), DataError);
    CHECK(iterations_per_epoch(20, 1461, 20, 365) == 5);
    CHECK(iterations_per_epoch(671, 5479, 100, 365) == 101);
    CHECK(iterations_per_epoch(1, 10, 100, 365) == 1);
}

TEST_CASE("normalization uses the training split") {
    const auto& ds = small_twin().dataset;
    const auto split = resolve_split(small_config("delta"), ds);
    const auto n = compute_normalization(ds, split);
    REQUIRE(n.attributes.size() == data::kAttributeCount);
    REQUIRE(n.forcing.size() == kForcingFeatures);
    double sum = 0.0;
    std::size_t count = 0;
    for (const auto& b : ds.basins)
        for (std::size_t d = 0; d < 300; ++d, ++count) sum += b.forcing.pet[d];
    CHECK(n.forcing.mean[2] == doctest::Approx(sum / static_cast<double>(count)).epsilon(1e-12));
    const auto all = compute_normalization(ds, {0, 400, 0, 400});
    CHECK(all.forcing.mean[2] != n.forcing.mean[2]);
}

TEST_CASE("batch assembly") {
    const auto& ds = small_twin().dataset;
    const auto norm = compute_normalization(ds, {0, 300, 300, 400});
    const auto b = assemble_batch(ds, norm, {{2, 40}, {0, 100}}, 30, 10);
    CHECK(b.days() == 40);
    REQUIRE(b.forcing.size() == 40);
    REQUIRE(b.observed.size() == 10);
    CHECK(b.forcing[0].precip[0] == ds.basins[2].forcing.prcp[10]);
    CHECK(b.forcing[5].pet[1] == ds.basins[0].forcing.pet[75]);
    CHECK(b.observed[3][0] == ds.basins[2].flow.q[43]);
    CHECK(b.inputs[0].cols() == kForcingFeatures + data::kAttributeCount);
    CHECK(b.inputs[7](1, 0) == doctest::Approx(norm.forcing.normalize(0, ds.basins[0].forcing.prcp[77])));
    CHECK_THROWS_AS(assemble_batch(ds, norm, {{0, 10}}, 30, 10), std::out_of_range);
}

TEST_CASE("end-to-end batch gradient matches finite differences") {
    const auto& ds = small_twin().dataset;
    const auto norm = compute_normalization(ds, {0, 300, 300, 400});
    for (const char* name : {"delta_gamma_beta_t", "delta_nnr", "dpl_hbv", "lstm"}) {
        const std::string model_name = name;
        CAPTURE(model_name);
        auto cfg = small_config(name);
        cfg.hidden = 3;
        Model model = Model::create(cfg);
        const auto batch = assemble_batch(ds, norm, {{0, 60}, {3, 90}}, 20, 25);
        // The warm-up is detached by design, so the oracle holds it fixed too.
        std::optional<WarmStart> warm;
        if (!model.streamflow) warm = spin_up(model, batch);
        const WarmStart* frozen = warm ? &*warm : nullptr;
        ad::Tape tape;
        nn::TapeBinder binder(tape);
        const auto loss = batch_loss(model, batch, norm, binder, frozen);
        auto params = model.parameters();
        const auto grads = nn::collect_gradients(params, binder, tape.backward(loss.total));
        std::mt19937_64 rng(2);
        int checked = 0;
        for (std::size_t p = 0; p < params.size(); ++p) {
            Tensor& w = *params[p].second;
            std::uniform_int_distribution<std::size_t> pick(0, w.size() - 1);
            for (int rep = 0; rep < 3; ++rep) {
                const std::size_t k = pick(rng);
                const double orig = w[k], h = 1e-5;
                w[k] = orig + h;
                const double up = evaluate_batch_loss(model, norm, batch, frozen).total.item();
                w[k] = orig - h;
                const double down = evaluate_batch_loss(model, norm, batch, frozen).total.item();
                w[k] = orig;
                const double numeric = (up - down) / (2 * h);
                const double analytic = grads[p][k];
                CAPTURE(params[p].first);
                CHECK(std::abs(analytic - numeric) / (std::abs(analytic) + 1e-8) < 1e-4 + 1e-6 / (std::abs(analytic) + 1e-8));
                ++checked;
            }
        }
        CHECK(checked >= 12);
    }
}

TEST_CASE("training run: trace, determinism, checkpoint round trip") {
    const auto& ds = small_twin().dataset;
    const auto cfg = small_config("delta_gamma_beta_t");
    const auto dir_a = scratch("a"), dir_b = scratch("b");
    std::vector<TraceRow> seen;
    auto ck = train_model(ds, cfg, {.out_dir = dir_a, .on_iteration = [&](const TraceRow& r) { seen.push_back(r); }});
    const std::size_t per_epoch = iterations_per_epoch(4, 300, 3, 60);
    REQUIRE(ck.trace.size() == 2 * per_epoch);
    CHECK(seen == ck.trace);
    CHECK(ck.epoch == 2);
    for (std::size_t i = 0; i < ck.trace.size(); ++i) {
        CHECK(ck.trace[i].iteration == i + 1);
        CHECK(ck.trace[i].epoch == i / per_epoch + 1);
        CHECK(std::isfinite(ck.trace[i].loss));
        const double mix = 0.75 * ck.trace[i].plain + 0.25 * ck.trace[i].transformed;
        CHECK(ck.trace[i].loss == doctest::Approx(mix).epsilon(1e-12));
    }
    CHECK(read_trace_csv(dir_a / kTraceFile) == ck.trace);

    train_model(ds, cfg, {.out_dir = dir_b});
    CHECK(slurp(dir_a / kCheckpointFile) == slurp(dir_b / kCheckpointFile));
    CHECK(slurp(dir_a / kTraceFile) == slurp(dir_b / kTraceFile));

    // Reload gives bit-identical simulations.
    auto loaded = load_checkpoint(dir_a / kCheckpointFile);
    CHECK(loaded.trace == ck.trace);
    CHECK(loaded.vocabulary == ds.vocabulary);
    CHECK(loaded.normalization.forcing.mean == ck.normalization.forcing.mean);
    const std::vector<std::size_t> basins{0, 1, 2, 3};
    const auto s1 = simulate_period(ck.model, ck.normalization, ds, basins, 300, 400);
    const auto s2 = simulate_period(loaded.model, loaded.normalization, ds, basins, 300, 400);
    for (std::size_t i = 0; i < 4; ++i) CHECK(s1[i].columns == s2[i].columns);
    CHECK(s1[0].size() == 100);
    CHECK(s1[0].dates.front() == ds.date_at(300));

    // Saving the reloaded checkpoint reproduces the file.
    const auto again = scratch("again") / "ck.json";
    save_checkpoint(again, loaded);
    CHECK(slurp(again) == slurp(dir_a / kCheckpointFile));
}

TEST_CASE("resume continues the run exactly") {
    const auto& ds = small_twin().dataset;
    auto cfg = small_config("delta");
    const auto full = scratch("full"), part = scratch("part");
    train_model(ds, cfg, {.out_dir = full});
    auto one = cfg;
    one.epochs = 1;
    train_model(ds, one, {.out_dir = part});
    const auto first_half = read_trace_csv(part / kTraceFile);
    train_model(ds, cfg, {.out_dir = part, .resume = part / kCheckpointFile});
    const auto trace = read_trace_csv(part / kTraceFile);
    CHECK(trace.size() == 2 * first_half.size());
    CHECK(std::equal(first_half.begin(), first_half.end(), trace.begin()));
    CHECK(slurp(full / kCheckpointFile) == slurp(part / kCheckpointFile));
    CHECK(slurp(full / kTraceFile) == slurp(part / kTraceFile));

    auto other = cfg;
    other.hidden = 7;
    CHECK_THROWS_AS(train_model(ds, other, {.resume = part / kCheckpointFile}), ConfigError);
}

TEST_CASE("every model kind trains") {
    const auto& ds = small_twin().dataset;
    for (const char* name : {"dpl_hbv", "delta_beta_t", "delta_gamma_t", "delta_nnr", "lstm"}) {
        const std::string model_name = name;
        CAPTURE(model_name);
        auto cfg = small_config(name);
        cfg.epochs = 1;
        const auto ck = train_model(ds, cfg);
        REQUIRE_FALSE(ck.trace.empty());
        for (const auto& r : ck.trace) CHECK(std::isfinite(r.loss));
        const auto sims = simulate_period(ck.model, ck.normalization, ds, {1, 2}, 300, 400);
        for (const auto& s : sims)
            for (double q : s.column("Q_routed")) CHECK((std::isfinite(q) && q >= 0.0));
    }
}

TEST_CASE("training lowers the loss") {
    const auto& ds = small_twin().dataset;
    auto cfg = small_config("delta_gamma_beta_t");
    cfg.epochs = 12;
    cfg.learning_rate = 1e-2;
    const auto ck = train_model(ds, cfg);
    const std::size_t n = ck.trace.size(), k = n / 4;
    double head = 0.0, tail = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        head += ck.trace[i].loss;
        tail += ck.trace[n - 1 - i].loss;
    }
    CHECK(tail < 0.8 * head);
}

TEST_CASE("non-finite loss aborts with diagnostics") {
    auto ds = small_twin().dataset;
    for (double& p : ds.basins[1].forcing.prcp) p = 1e200;
    auto cfg = small_config("delta");
    cfg.batch_basins = 4;
    try {
        train_model(ds, cfg);
        FAIL("expected NumericsError");
    } catch (const NumericsError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("iteration 1") != std::string::npos);
        CHECK(msg.find(ds.basins[1].record.id) != std::string::npos);
    }
}

}  // TEST_SUITE
