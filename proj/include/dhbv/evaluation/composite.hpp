#pragma once

#include "dhbv/data/calendar.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace dhbv::eval {

/// One 8-day period: start date, calendar length (8, or 5/6 for the last of the year) and mean daily value.
struct Composite {
    data::Date start;
    int length = 8;
    double mean = 0.0;

    /// Period total, e.g. mm per 8 days for ET.
    double total() const { return mean * length; }
};

/// Start date and length of the 8-day period containing `d`; periods restart every January 1.
Composite period_of(const data::Date& d);

/**
 * Composites a contiguous daily series beginning at `first`. Periods only
 * partly covered at either end of the series are dropped, so every value is
 * a full-period mean. A NaN day makes its period NaN.
 */
std::vector<Composite> et_8day_composite(std::span<const double> daily, const data::Date& first);

struct EtMetrics {
    double r = 0.0;
    double rmse = 0.0;     // on period totals (mm per period)
    std::size_t periods = 0;
    double mean_sim = 0.0;  // mean daily ET over the matched periods
    double mean_ref = 0.0;
};

/**
 * Pearson r and RMSE of period totals over periods present (and finite) in
 * both series, matched by start date. Returns nullopt when fewer than 3
 * periods match or either side is constant, after appending a reason to
 * `warnings` if given.
 */
std::optional<EtMetrics> et_metrics(const std::vector<Composite>& sim, const std::vector<Composite>& ref,
                                    std::vector<std::string>* warnings = nullptr,
                                    const std::string& basin_id = {});

/// Reference ET per basin, keyed by basin id, sorted by period start.
using EtReference = std::map<std::string, std::vector<Composite>, std::less<>>;

/// CSV with columns basin_id, period_start, et (mean daily mm over the period).
EtReference read_et_reference(const std::filesystem::path& path);
void write_et_reference(const std::filesystem::path& path, const EtReference& ref);

}  // namespace dhbv::eval
