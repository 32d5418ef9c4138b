#include "dhbv/training/config.hpp"

#include "dhbv/error.hpp"

#include <set>

namespace dhbv::train {

using json = nlohmann::json;

std::string_view optimizer_name(OptimizerKind k) {
    switch (k) {
        case OptimizerKind::Adam: return "adam";
        case OptimizerKind::Adadelta: return "adadelta";
        case OptimizerKind::Sgd: return "sgd";
    }
    return "?";
}

OptimizerKind parse_optimizer(std::string_view name) {
    for (auto k : {OptimizerKind::Adam, OptimizerKind::Adadelta, OptimizerKind::Sgd}) {
        if (optimizer_name(k) == name) return k;
    }
    throw ConfigError("unknown optimizer '" + std::string(name) + "' (expected adam, adadelta or sgd)");
}

hbv::Variant TrainingConfig::variant() const {
    if (is_lstm()) throw ConfigError("model 'lstm' has no HBV variant");
    return hbv::parse_variant(model);
}

void TrainingConfig::validate() const {
    if (!is_lstm()) (void)variant();
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw ConfigError("alpha must lie in [0, 1], got " + std::to_string(alpha));
    if (batch_basins == 0) throw ConfigError("batch_basins must be >= 1");
    if (window_days == 0) throw ConfigError("window_days must be >= 1");
    if (hidden == 0) throw ConfigError("hidden must be >= 1");
    if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
    if (max_lag == 0) throw ConfigError("max_lag must be >= 1");
    for (auto h : nnr_hidden)
        if (h == 0) throw ConfigError("nnr_hidden sizes must be >= 1");
    if (train_start && train_end && *train_end < *train_start) throw ConfigError("train_end precedes train_start");
    if (test_start && test_end && *test_end < *test_start) throw ConfigError("test_end precedes test_start");
}

namespace {

const std::set<std::string, std::less<>> kKeys = {
    "model",  "batch_basins", "window_days", "warmup_days", "alpha",       "epochs",      "learning_rate",
    "seed",   "hidden",       "optimizer",   "clip_norm",   "max_lag",     "nnr_hidden",  "train_start",
    "train_end", "test_start", "test_end",
};

template <class V>
void read(const json& j, const char* key, V& out) {
    if (!j.contains(key)) return;
    try {
        out = j.at(key).get<V>();
    } catch (const json::exception&) {
        throw ConfigError(std::string("config field '") + key + "' has the wrong type");
    }
}

void read_date(const json& j, const char* key, std::optional<data::Date>& out) {
    if (!j.contains(key) || j.at(key).is_null()) return;
    if (!j.at(key).is_string()) throw ConfigError(std::string("config field '") + key + "' must be a date string");
    try {
        out = data::parse_date(j.at(key).get<std::string>());
    } catch (const DataError& e) {
        throw ConfigError(std::string("config field '") + key + "': " + e.what());
    }
}

}  // namespace

TrainingConfig config_from_json(const json& j) {
    if (!j.is_object()) throw ConfigError("training config must be a JSON object");
    for (const auto& [key, value] : j.items()) {
        if (!kKeys.contains(key)) throw ConfigError("unknown config field '" + key + "'");
    }
    TrainingConfig c;
    read(j, "model", c.model);
    read(j, "batch_basins", c.batch_basins);
    read(j, "window_days", c.window_days);
    read(j, "warmup_days", c.warmup_days);
    read(j, "alpha", c.alpha);
    read(j, "epochs", c.epochs);
    read(j, "learning_rate", c.learning_rate);
    read(j, "seed", c.seed);
    read(j, "hidden", c.hidden);
    read(j, "clip_norm", c.clip_norm);
    read(j, "max_lag", c.max_lag);
    read(j, "nnr_hidden", c.nnr_hidden);
    if (j.contains("optimizer")) {
        std::string name;
        read(j, "optimizer", name);
        c.optimizer = parse_optimizer(name);
    }
    read_date(j, "train_start", c.train_start);
    read_date(j, "train_end", c.train_end);
    read_date(j, "test_start", c.test_start);
    read_date(j, "test_end", c.test_end);
    c.validate();
    return c;
}

json config_to_json(const TrainingConfig& c) {
    json j;
    j["model"] = c.model;
    j["batch_basins"] = c.batch_basins;
    j["window_days"] = c.window_days;
    j["warmup_days"] = c.warmup_days;
    j["alpha"] = c.alpha;
    j["epochs"] = c.epochs;
    j["learning_rate"] = c.learning_rate;
    j["seed"] = c.seed;
    j["hidden"] = c.hidden;
    j["optimizer"] = std::string(optimizer_name(c.optimizer));
    j["clip_norm"] = c.clip_norm;
    j["max_lag"] = c.max_lag;
    j["nnr_hidden"] = c.nnr_hidden;
    auto date = [](const std::optional<data::Date>& d) { return d ? json(d->to_string()) : json(nullptr); };
    j["train_start"] = date(c.train_start);
    j["train_end"] = date(c.train_end);
    j["test_start"] = date(c.test_start);
    j["test_end"] = date(c.test_end);
    return j;
}

Split resolve_split(const TrainingConfig& c, const data::Dataset& ds) {
    if (ds.n_days == 0) throw DataError("dataset has no days");
    auto index = [&](const std::optional<data::Date>& d, std::size_t fallback, bool end) -> std::size_t {
        if (!d) return fallback;
        try {
            return ds.day_index(*d) + (end ? 1 : 0);
        } catch (const DataError&) {
            throw ConfigError("date " + d->to_string() + " lies outside the dataset record " + ds.start.to_string() +
                              " to " + ds.date_at(ds.n_days - 1).to_string());
        }
    };
    Split s;
    s.train_begin = index(c.train_start, 0, false);
    s.train_end = index(c.train_end, ds.n_days, true);
    const std::size_t test_default = s.train_end < ds.n_days ? s.train_end : 0;
    s.test_begin = index(c.test_start, test_default, false);
    s.test_end = index(c.test_end, ds.n_days, true);
    if (s.train_end <= s.train_begin) throw ConfigError("empty training period");
    if (s.test_end <= s.test_begin) throw ConfigError("empty test period");
    if (c.warmup_days + c.window_days > s.train_days()) {
        throw ConfigError("warm-up (" + std::to_string(c.warmup_days) + ") plus window (" +
                          std::to_string(c.window_days) + ") exceeds the " + std::to_string(s.train_days()) +
                          "-day training period");
    }
    return s;
}

}  // namespace dhbv::train
