#include "dhbv/training/model.hpp"

#include "dhbv/routing/unit_hydrograph.hpp"

#include <algorithm>
#include <cmath>

namespace dhbv::train {

namespace {

constexpr std::size_t kSimulationChunk = 64;

std::array<double, kForcingFeatures> forcing_row(const data::ForcingSeries& f, std::size_t d) {
    return {f.prcp[d], f.tmean[d], f.pet[d]};
}

Tensor column_of(const std::vector<double>& v) { return Tensor::column(v); }

}  // namespace

Normalization compute_normalization(const data::Dataset& ds, const Split& split) {
    Normalization n;
    std::vector<std::vector<double>> attrs;
    std::vector<std::vector<double>> forcing;
    std::vector<double> target;
    for (const auto& b : ds.basins) {
        attrs.push_back(b.record.attributes);
        for (std::size_t d = split.train_begin; d < split.train_end; ++d) {
            const auto row = forcing_row(b.forcing, d);
            forcing.emplace_back(row.begin(), row.end());
            if (b.flow.mask[d]) target.push_back(data::flow_transform(b.flow.q[d]));
        }
    }
    n.attributes = data::compute_stats(attrs, data::kAttributeCount);
    n.forcing = data::compute_stats(forcing, kForcingFeatures);
    n.target = data::compute_stats(target);
    return n;
}

BatchData assemble_batch(const data::Dataset& ds, const Normalization& norm, const std::vector<Sample>& samples,
                         std::size_t warmup, std::size_t window) {
    if (samples.empty()) throw std::invalid_argument("assemble_batch: empty batch");
    BatchData out;
    out.warmup = warmup;
    out.window = window;
    const std::size_t B = samples.size();
    const std::size_t width = kForcingFeatures + data::kAttributeCount;
    for (const auto& s : samples) {
        if (s.basin >= ds.basins.size()) throw std::out_of_range("assemble_batch: basin index out of range");
        if (s.start < warmup || s.start + window > ds.n_days) {
            throw std::out_of_range("assemble_batch: sample window leaves the record");
        }
        out.basins.push_back(s.basin);
    }
    std::vector<std::vector<double>> attrs(B);
    for (std::size_t i = 0; i < B; ++i) {
        const auto& a = ds.basins[samples[i].basin].record.attributes;
        attrs[i].resize(a.size());
        for (std::size_t k = 0; k < a.size(); ++k) attrs[i][k] = norm.attributes.normalize(k, a[k]);
    }
    const std::size_t days = warmup + window;
    out.forcing.reserve(days);
    out.inputs.reserve(days);
    std::vector<double> p(B), t(B), e(B), q(B);
    for (std::size_t k = 0; k < days; ++k) {
        Tensor x(B, width);
        for (std::size_t i = 0; i < B; ++i) {
            const auto& basin = ds.basins[samples[i].basin];
            const std::size_t d = samples[i].start - warmup + k;
            const auto row = forcing_row(basin.forcing, d);
            p[i] = row[0];
            t[i] = row[1];
            e[i] = row[2];
            for (std::size_t f = 0; f < kForcingFeatures; ++f) x(i, f) = norm.forcing.normalize(f, row[f]);
            for (std::size_t a = 0; a < data::kAttributeCount; ++a) x(i, kForcingFeatures + a) = attrs[i][a];
            q[i] = basin.flow.mask[d] ? basin.flow.q[d] : std::nan("");
        }
        out.forcing.push_back({column_of(p), column_of(t), column_of(e)});
        out.inputs.push_back(std::move(x));
        if (k >= warmup) out.observed.push_back(column_of(q));
    }
    return out;
}

Model Model::create(const TrainingConfig& config) {
    config.validate();
    Model m;
    m.config = config;
    if (config.is_lstm()) {
        m.streamflow = nn::StreamflowLstm::init(kForcingFeatures + data::kAttributeCount, config.hidden, config.seed);
        return m;
    }
    const auto v = config.variant();
    nn::ParamNetConfig pc;
    pc.attribute_dim = data::kAttributeCount;
    pc.forcing_dim = kForcingFeatures;
    pc.hidden = config.hidden;
    pc.static_param_count = hbv::static_params(v).size();
    pc.dynamic_kinds = hbv::dynamic_kinds(v);
    m.param_net = nn::ParamNet::init(pc, config.seed);
    if (hbv::uses_nnr(v)) {
        nn::NnrConfig nc;
        nc.hidden = config.nnr_hidden;
        m.nnr = nn::NnrNet::init(nc, config.seed + 1);
    }
    return m;
}

nn::ParameterList Model::parameters() {
    if (streamflow) return streamflow->parameters();
    auto out = param_net.parameters();
    if (nnr) {
        auto extra = nnr->parameters();
        out.insert(out.end(), extra.begin(), extra.end());
    }
    return out;
}

double lstm_output_to_flow(double z, const Normalization& norm) {
    const double q_hat = std::max(norm.target.denormalize(0, z), -1.0);
    const double root = std::pow(10.0, q_hat) - 0.1;
    return root * root;
}

namespace {

std::vector<Tensor> lstm_flows(const std::vector<Tensor>& z, const Normalization& norm) {
    std::vector<Tensor> out;
    out.reserve(z.size());
    for (const auto& day : z) {
        Tensor q = day;
        for (double& v : q.values()) v = lstm_output_to_flow(v, norm);
        out.push_back(std::move(q));
    }
    return out;
}

LossTerms<Variable> lstm_batch_loss(const Model& model, const BatchData& batch, const Normalization& norm,
                                    nn::TapeBinder& binder) {
    const auto pred = nn::lstm_streamflow_forward(*model.streamflow, batch.inputs, binder);
    const std::vector<Variable> window(pred.begin() + static_cast<std::ptrdiff_t>(batch.warmup), pred.end());
    std::vector<Tensor> z_obs;
    z_obs.reserve(batch.observed.size());
    for (const auto& day : batch.observed) {
        Tensor z = day;
        for (double& v : z.values())
            if (std::isfinite(v)) v = norm.target.normalize(0, data::flow_transform(v));
        z_obs.push_back(std::move(z));
    }
    LossTerms<Variable> out;
    out.total = masked_rmse(window, make_target(z_obs, false));
    std::vector<Tensor> z_sim;
    for (const auto& v : window) z_sim.push_back(v.value());
    const auto report = compute_loss(lstm_flows(z_sim, norm), make_target(batch.observed), 0.0);
    out.plain = report.plain;
    out.transformed = report.transformed;
    return out;
}

}  // namespace

namespace {

WarmStart run_warmup(const Model& model, const BatchData& batch, const hbv::HbvParams<Tensor>& params,
                     const hbv::DynamicParams<Tensor>& dynamic, const nn::BoundNnr<Tensor>* nnr) {
    WarmStart w;
    w.state = hbv::initial_state(params);
    const std::size_t W = batch.warmup;
    if (W == 0) return w;
    auto r = hbv::run_hbv(w.state, batch.forcing, 0, W, params, dynamic, model.config.variant(), nnr);
    w.state = r.states.back();
    const std::size_t history = std::min(W, model.config.max_lag - 1);
    for (std::size_t k = W - history; k < W; ++k) w.runoff.push_back(r.fluxes[k].q);
    return w;
}

}  // namespace

WarmStart spin_up(const Model& model, const BatchData& batch) {
    const auto v = model.config.variant();
    nn::ValueBinder vb;
    const auto out = nn::param_net_forward(model.param_net, batch.inputs, vb);
    const auto params = hbv::scale_static(out.static_unit, v, model.ranges);
    const auto dynamic = hbv::scale_dynamic(out.dynamic_unit, v, model.ranges);
    std::optional<nn::BoundNnr<Tensor>> nnr;
    if (model.nnr) nnr = nn::bind_nnr(*model.nnr, vb);
    return run_warmup(model, batch, params, dynamic, nnr ? &*nnr : nullptr);
}

LossTerms<Variable> batch_loss(const Model& model, const BatchData& batch, const Normalization& norm,
                               nn::TapeBinder& binder, const WarmStart* warm) {
    if (model.streamflow) return lstm_batch_loss(model, batch, norm, binder);
    const auto v = model.config.variant();
    const std::size_t W = batch.warmup, T = batch.window;

    const auto out = nn::param_net_forward(model.param_net, batch.inputs, binder);
    const auto params = hbv::scale_static(out.static_unit, v, model.ranges);
    const auto dynamic = hbv::scale_dynamic(out.dynamic_unit, v, model.ranges);

    std::optional<nn::BoundNnr<Variable>> nnr_tape;
    if (model.nnr) nnr_tape = nn::bind_nnr(*model.nnr, binder);

    // Warm-up on plain values: storages spin up, no gradient path.
    WarmStart computed;
    if (!warm) {
        std::optional<nn::BoundNnr<Tensor>> nnr_value;
        nn::ValueBinder vb;
        if (model.nnr) nnr_value = nn::bind_nnr(*model.nnr, vb);
        computed = run_warmup(model, batch, hbv::detach(params), hbv::detach(dynamic, 0, W),
                              nnr_value ? &*nnr_value : nullptr);
        warm = &computed;
    }

    const auto& s = warm->state;
    const hbv::State<Variable> start{binder.constant(s.snow), binder.constant(s.liquid), binder.constant(s.soil),
                                     binder.constant(s.upper), binder.constant(s.lower)};
    const auto roll = hbv::run_hbv(start, batch.forcing, W, W + T, params, dynamic, v,
                                   nnr_tape ? &*nnr_tape : nullptr);

    // Routing sees the last warm-up days as fixed history.
    std::vector<Variable> runoff;
    runoff.reserve(warm->runoff.size() + T);
    for (const auto& q : warm->runoff) runoff.push_back(binder.constant(q));
    for (const auto& f : roll.fluxes) runoff.push_back(f.q);
    const auto kernel =
        routing::gamma_kernel(params[hbv::Param::RouteA], params[hbv::Param::RouteTau], model.config.max_lag);
    const auto routed = routing::route_batch(runoff, kernel, warm->runoff.size());
    return compute_loss(routed, make_target(batch.observed), model.config.alpha);
}

SimulationResult simulate_batch(const Model& model, const BatchData& batch, const Normalization& norm) {
    nn::ValueBinder vb;
    SimulationResult r;
    r.forcing = batch.forcing;
    if (model.streamflow) {
        r.routed = lstm_flows(nn::lstm_streamflow_forward(*model.streamflow, batch.inputs, vb), norm);
        return r;
    }
    const auto v = model.config.variant();
    const auto out = nn::param_net_forward(model.param_net, batch.inputs, vb);
    r.params = hbv::scale_static(out.static_unit, v, model.ranges);
    r.dynamic = hbv::scale_dynamic(out.dynamic_unit, v, model.ranges);
    std::optional<nn::BoundNnr<Tensor>> nnr;
    if (model.nnr) nnr = nn::bind_nnr(*model.nnr, vb);
    r.rollout = hbv::run_hbv(hbv::initial_state(r.params), batch.forcing, 0, batch.days(), r.params, r.dynamic, v,
                             nnr ? &*nnr : nullptr);
    std::vector<Tensor> runoff;
    runoff.reserve(batch.days());
    for (const auto& f : r.rollout.fluxes) runoff.push_back(f.q);
    const auto kernel = routing::gamma_kernel(r.params[hbv::Param::RouteA], r.params[hbv::Param::RouteTau],
                                              model.config.max_lag);
    r.routed = routing::route_batch(runoff, kernel, 0);
    return r;
}

std::vector<data::BasinSimulation> simulate_period(const Model& model, const Normalization& norm,
                                                   const data::Dataset& ds, const std::vector<std::size_t>& basins,
                                                   std::size_t begin, std::size_t end) {
    if (end <= begin || end > ds.n_days) throw std::out_of_range("simulate_period: invalid day range");
    const std::size_t warmup = std::min(model.config.warmup_days, begin);
    const data::Date first = ds.date_at(begin - warmup);
    std::vector<data::BasinSimulation> out(basins.size());
    for (std::size_t c0 = 0; c0 < basins.size(); c0 += kSimulationChunk) {
        const std::size_t c1 = std::min(basins.size(), c0 + kSimulationChunk);
        std::vector<Sample> samples;
        for (std::size_t i = c0; i < c1; ++i) samples.push_back({basins[i], begin});
        const auto batch = assemble_batch(ds, norm, samples, warmup, end - begin);
        const auto sim = simulate_batch(model, batch, norm);
        for (std::size_t i = c0; i < c1; ++i) {
            const std::size_t b = i - c0;
            const auto& id = ds.basins[basins[i]].record.id;
            if (!model.streamflow) {
                out[i] = data::extract_basin(id, first, sim.forcing, sim.rollout, sim.routed, sim.params, sim.dynamic,
                                             model.config.variant(), b, warmup, batch.days());
                continue;
            }
            auto& s = out[i];
            s.basin_id = id;
            for (std::size_t t = warmup; t < batch.days(); ++t) {
                s.dates.push_back(first.plus_days(static_cast<std::int64_t>(t)));
                s.columns["P"].push_back(sim.forcing[t].precip[b]);
                s.columns["T"].push_back(sim.forcing[t].temp[b]);
                s.columns["E_p"].push_back(sim.forcing[t].pet[b]);
                s.columns["Q_routed"].push_back(sim.routed[t][b]);
            }
        }
    }
    return out;
}

}  // namespace dhbv::train
