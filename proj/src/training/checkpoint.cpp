#include "dhbv/training/checkpoint.hpp"

#include "dhbv/data/csv.hpp"
#include "dhbv/error.hpp"

#include <fstream>
#include <map>
#include <sstream>

namespace dhbv::train {

using json = nlohmann::json;

namespace {

json stats_json(const data::NormStats& s) { return json{{"mean", s.mean}, {"std", s.std}}; }

data::NormStats stats_from(const json& j) {
    data::NormStats s;
    s.mean = j.at("mean").get<std::vector<double>>();
    s.std = j.at("std").get<std::vector<double>>();
    if (s.mean.size() != s.std.size()) throw ConfigError("checkpoint normalization statistics are ragged");
    return s;
}

}  // namespace

json checkpoint_to_json(Checkpoint& c) {
    json j;
    j["format"] = std::string(kCheckpointFormat);
    j["version"] = kCheckpointVersion;
    j["config"] = config_to_json(c.model.config);
    j["epoch"] = c.epoch;
    json weights = json::object();
    for (const auto& [name, t] : c.model.parameters()) {
        weights[name] = json{{"rows", t->rows()},
                             {"cols", t->cols()},
                             {"data", std::vector<double>(t->values().begin(), t->values().end())}};
    }
    j["weights"] = std::move(weights);
    j["normalization"] = json{{"attributes", stats_json(c.normalization.attributes)},
                              {"forcing", stats_json(c.normalization.forcing)},
                              {"target", stats_json(c.normalization.target)}};
    j["vocabulary"] = c.vocabulary;
    json trace = json::array();
    for (const auto& r : c.trace) trace.push_back(json::array({r.iteration, r.epoch, r.loss, r.plain, r.transformed}));
    j["loss_history"] = std::move(trace);
    j["optimizer"] = c.optimizer;
    j["rng_state"] = c.rng_state;
    return j;
}

Checkpoint checkpoint_from_json(const json& j) {
    try {
        if (!j.is_object() || j.value("format", std::string()) != kCheckpointFormat) {
            throw ConfigError("not a dhbv checkpoint");
        }
        const int version = j.at("version").get<int>();
        if (version != kCheckpointVersion) {
            throw ConfigError("unsupported checkpoint version " + std::to_string(version));
        }
        Checkpoint c;
        c.model = Model::create(config_from_json(j.at("config")));
        const auto& weights = j.at("weights");
        auto params = c.model.parameters();
        if (weights.size() != params.size()) {
            throw ConfigError("checkpoint holds " + std::to_string(weights.size()) + " weight tensors, model expects " +
                              std::to_string(params.size()));
        }
        for (auto& [name, t] : params) {
            if (!weights.contains(name)) throw ConfigError("checkpoint lacks weight " + name);
            const auto& w = weights.at(name);
            const auto rows = w.at("rows").get<std::size_t>(), cols = w.at("cols").get<std::size_t>();
            auto values = w.at("data").get<std::vector<double>>();
            if (rows != t->rows() || cols != t->cols() || values.size() != rows * cols) {
                throw ConfigError("checkpoint weight " + name + " has the wrong shape");
            }
            *t = Tensor(rows, cols, std::move(values));
        }
        const auto& n = j.at("normalization");
        c.normalization.attributes = stats_from(n.at("attributes"));
        c.normalization.forcing = stats_from(n.at("forcing"));
        c.normalization.target = stats_from(n.at("target"));
        c.vocabulary = j.at("vocabulary").get<data::Vocabulary>();
        c.epoch = j.at("epoch").get<std::size_t>();
        for (const auto& r : j.at("loss_history")) {
            c.trace.push_back({r.at(0).get<std::size_t>(), r.at(1).get<std::size_t>(), r.at(2).get<double>(),
                               r.at(3).get<double>(), r.at(4).get<double>()});
        }
        c.optimizer = j.at("optimizer");
        c.rng_state = j.at("rng_state").get<std::string>();
        return c;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("malformed checkpoint: ") + e.what());
    }
}

void save_checkpoint(const std::filesystem::path& path, Checkpoint& c) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    const std::string text = checkpoint_to_json(c).dump();
    const auto tmp = std::filesystem::path(path.string() + ".tmp");
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw ConfigError("cannot write checkpoint " + path.string());
        out << text << '\n';
    }
    std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open checkpoint " + path.string());
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigError("checkpoint " + path.string() + " is not valid JSON: " + e.what());
    }
    return checkpoint_from_json(j);
}

void write_trace_csv(const std::filesystem::path& path, const std::vector<TraceRow>& trace) {
    data::CsvWriter w({"iteration", "epoch", "loss", "plain", "transformed"});
    for (const auto& r : trace) {
        w.add_row({std::to_string(r.iteration), std::to_string(r.epoch), data::format_number(r.loss),
                   data::format_number(r.plain), data::format_number(r.transformed)});
    }
    w.write(path);
}

std::vector<TraceRow> read_trace_csv(const std::filesystem::path& path) {
    const auto t = data::read_csv(path);
    const std::size_t ci = t.require("iteration"), ce = t.require("epoch"), cl = t.require("loss"),
                      cp = t.require("plain"), ct = t.require("transformed");
    std::vector<TraceRow> out;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        const std::string w = path.string() + ":" + std::to_string(t.line_numbers[r]);
        const auto& row = t.rows[r];
        out.push_back({static_cast<std::size_t>(data::parse_number(row[ci], w)),
                       static_cast<std::size_t>(data::parse_number(row[ce], w)), data::parse_number(row[cl], w),
                       data::parse_number(row[cp], w), data::parse_number(row[ct], w)});
    }
    return out;
}

}  // namespace dhbv::train
