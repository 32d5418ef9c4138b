#include "dhbv/data/simulation_io.hpp"

#include "dhbv/data/csv.hpp"
#include "dhbv/error.hpp"

#include <cmath>

namespace dhbv::data {

const std::vector<double>& BasinSimulation::column(std::string_view name) const {
    auto it = columns.find(name);
    if (it == columns.end()) throw DataError("simulation for basin " + basin_id + " lacks column " + std::string(name));
    return it->second;
}

BasinSimulation extract_basin(const std::string& id, const Date& first_date,
                              const std::vector<hbv::DayForcing>& forcing, const hbv::Rollout<ad::Tensor>& rollout,
                              const std::vector<ad::Tensor>& routed, const hbv::HbvParams<ad::Tensor>& params,
                              const hbv::DynamicParams<ad::Tensor>& dynamic, hbv::Variant variant, std::size_t basin,
                              std::size_t begin, std::size_t end) {
    if (end > rollout.fluxes.size() || end > routed.size() || end > forcing.size() || begin > end) {
        throw std::invalid_argument("extract_basin: day range exceeds the simulation");
    }
    using hbv::Param;
    BasinSimulation s;
    s.basin_id = id;
    for (auto name : kSimulationColumns) s.columns[std::string(name)].reserve(end - begin);
    auto put = [&](std::string_view name, double v) { s.columns.find(name)->second.push_back(v); };
    const std::size_t b = basin;
    for (std::size_t t = begin; t < end; ++t) {
        s.dates.push_back(first_date.plus_days(static_cast<std::int64_t>(t)));
        const auto& st = rollout.states[t];
        const auto& f = rollout.fluxes[t];
        put("P", forcing[t].precip[b]);
        put("T", forcing[t].temp[b]);
        put("E_p", forcing[t].pet[b]);
        put("S_p", st.snow[b]);
        put("S_liq", st.liquid[b]);
        put("S_s", st.soil[b]);
        put("S_uz", st.upper[b]);
        put("S_lz", st.lower[b]);
        put("P_s", f.snowfall[b]);
        put("P_r", f.rainfall[b]);
        put("S_melt", f.melt[b]);
        put("R_fz", f.refreeze[b]);
        put("I_snow", f.infiltration[b]);
        put("P_eff", f.effective_rain[b]);
        put("E_x", f.excess[b]);
        put("E_T", f.et[b]);
        put("P_erc", f.percolation[b]);
        put("Q0", f.q0[b]);
        put("Q1", f.q1[b]);
        put("Q2", f.q2[b]);
        put("Q", f.q[b]);
        put("Q_routed", routed[t][b]);
        put("beta", dynamic.beta.empty() ? params[Param::Beta][b] : dynamic.beta[t][b]);
        double gamma = std::nan("");
        if (hbv::uses_gamma(variant)) gamma = dynamic.gamma.empty() ? params[Param::Gamma][b] : dynamic.gamma[t][b];
        put("gamma", gamma);
    }
    return s;
}

void write_simulation_csv(const std::filesystem::path& path, const BasinSimulation& sim) {
    std::vector<std::string> header{"date"};
    std::vector<const std::vector<double>*> cols;
    for (auto c : kSimulationColumns) {
        auto it = sim.columns.find(c);
        if (it == sim.columns.end()) continue;
        if (it->second.size() != sim.size()) throw std::invalid_argument("write_simulation_csv: ragged column " + it->first);
        header.emplace_back(c);
        cols.push_back(&it->second);
    }
    if (!sim.columns.contains("Q_routed")) throw std::invalid_argument("write_simulation_csv: missing Q_routed");
    CsvWriter w(header);
    for (std::size_t t = 0; t < sim.size(); ++t) {
        std::vector<std::string> row{sim.dates[t].to_string()};
        for (const auto* c : cols) row.push_back(format_number((*c)[t]));
        w.add_row(std::move(row));
    }
    w.write(path);
}

BasinSimulation read_simulation_csv(const std::filesystem::path& path, const std::string& basin_id) {
    const CsvTable t = read_csv(path);
    BasinSimulation s;
    s.basin_id = basin_id.empty() ? path.stem().string() : basin_id;
    const std::size_t c_date = t.require("date");
    std::vector<std::pair<std::string, std::size_t>> cols;
    for (std::size_t i = 0; i < t.header.size(); ++i)
        if (i != c_date) cols.emplace_back(t.header[i], i);
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        const std::string w = path.string() + ":" + std::to_string(t.line_numbers[r]);
        try {
            s.dates.push_back(parse_date(t.rows[r][c_date]));
        } catch (const DataError& e) {
            throw DataError(w + ": " + e.what());
        }
        for (const auto& [name, i] : cols) s.columns[name].push_back(parse_number(t.rows[r][i], w));
    }
    return s;
}

}  // namespace dhbv::data
