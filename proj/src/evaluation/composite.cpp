#include "dhbv/evaluation/composite.hpp"

#include "dhbv/data/csv.hpp"
#include "dhbv/error.hpp"
#include "dhbv/evaluation/metrics.hpp"

#include <algorithm>
#include <cmath>

namespace dhbv::eval {

Composite period_of(const data::Date& d) {
    const int doy = d.day_of_year();
    const int start_doy = (doy - 1) / 8 * 8 + 1;
    const int year_days = data::is_leap_year(d.year) ? 366 : 365;
    Composite c;
    c.start = data::Date{d.year, 1, 1}.plus_days(start_doy - 1);
    c.length = std::min(8, year_days - start_doy + 1);
    return c;
}

std::vector<Composite> et_8day_composite(std::span<const double> daily, const data::Date& first) {
    std::vector<Composite> out;
    std::size_t i = 0;
    // Skip the tail of a period that began before the series.
    while (i < daily.size() && period_of(first.plus_days(static_cast<std::int64_t>(i))).start !=
                                   first.plus_days(static_cast<std::int64_t>(i))) {
        ++i;
    }
    while (i < daily.size()) {
        Composite c = period_of(first.plus_days(static_cast<std::int64_t>(i)));
        const std::size_t len = static_cast<std::size_t>(c.length);
        if (i + len > daily.size()) break;
        double sum = 0.0;
        for (std::size_t k = 0; k < len; ++k) sum += daily[i + k];
        c.mean = sum / static_cast<double>(len);
        out.push_back(c);
        i += len;
    }
    return out;
}

std::optional<EtMetrics> et_metrics(const std::vector<Composite>& sim, const std::vector<Composite>& ref,
                                    std::vector<std::string>* warnings, const std::string& basin_id) {
    auto warn = [&](const std::string& why) {
        if (warnings) warnings->push_back("basin " + basin_id + ": ET metrics skipped, " + why);
        return std::nullopt;
    };
    std::map<data::Date, const Composite*> by_start;
    for (const auto& c : ref) {
        if (std::isfinite(c.mean)) by_start[c.start] = &c;
    }
    std::vector<double> s, r;
    double sim_sum = 0.0, ref_sum = 0.0, days = 0.0;
    for (const auto& c : sim) {
        if (!std::isfinite(c.mean)) continue;
        auto it = by_start.find(c.start);
        if (it == by_start.end()) continue;
        const double ref_total = it->second->mean * c.length;
        s.push_back(c.total());
        r.push_back(ref_total);
        sim_sum += c.total();
        ref_sum += ref_total;
        days += c.length;
    }
    if (s.size() < 3) return warn(std::to_string(s.size()) + " overlapping periods (need 3)");
    EtMetrics m;
    try {
        m.r = pearson(s, r);
    } catch (const DataError&) {
        return warn("a constant series has no correlation");
    }
    m.rmse = rmse(s, r);
    m.periods = s.size();
    m.mean_sim = sim_sum / days;
    m.mean_ref = ref_sum / days;
    return m;
}

EtReference read_et_reference(const std::filesystem::path& path) {
    const auto table = data::read_csv(path);
    const auto id_col = table.require("basin_id");
    const auto date_col = table.require("period_start");
    const auto et_col = table.require("et");
    EtReference out;
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        const auto& row = table.rows[i];
        const std::string where = path.string() + ":" + std::to_string(table.line_numbers[i]);
        Composite c = period_of(data::parse_date(row[date_col]));
        if (c.start != data::parse_date(row[date_col])) {
            throw DataError(where + ": " + row[date_col] + " is not an 8-day period start");
        }
        c.mean = data::parse_number(row[et_col], where);
        out[row[id_col]].push_back(c);
    }
    for (auto& [id, series] : out) {
        std::sort(series.begin(), series.end(), [](const Composite& a, const Composite& b) { return a.start < b.start; });
        for (std::size_t k = 1; k < series.size(); ++k) {
            if (series[k].start == series[k - 1].start) {
                throw DataError(path.string() + ": basin " + id + " repeats period " + series[k].start.to_string());
            }
        }
    }
    return out;
}

void write_et_reference(const std::filesystem::path& path, const EtReference& ref) {
    data::CsvWriter w({"basin_id", "period_start", "et"});
    for (const auto& [id, series] : ref) {
        for (const auto& c : series) w.add_row({id, c.start.to_string(), data::format_number(c.mean)});
    }
    w.write(path);
}

}  // namespace dhbv::eval
