#pragma once

#include "dhbv/data/calendar.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace dhbv::data {

inline constexpr std::size_t kAttributeCount = 35;

/// Static attribute columns, in the order g_A sees them.
inline constexpr std::array<std::string_view, kAttributeCount> kAttributeNames = {
    "p_mean",          "pet_mean",           "p_seasonality",        "frac_snow",
    "aridity",         "high_prec_freq",     "high_prec_dur",        "low_prec_freq",
    "low_prec_dur",    "elev_mean",          "slope_mean",           "area_gages2",
    "frac_forest",     "lai_max",            "lai_diff",             "gvf_max",
    "gvf_diff",        "dom_land_cover_frac", "dom_land_cover",      "root_depth_50",
    "soil_depth_pelletier", "soil_depth_statgso", "soil_porosity",   "soil_conductivity",
    "max_water_content", "sand_frac",        "silt_frac",            "clay_frac",
    "geol_class_1st",  "geol_class_1st_frac", "geol_class_2nd",      "geol_class_2nd_frac",
    "carbonate_rocks_frac", "geol_porosity", "geol_permeability",
};

bool is_categorical_attribute(std::string_view name);
std::size_t attribute_index(std::string_view name);

struct ForcingSeries {
    std::vector<Date> dates;
    std::vector<double> prcp;  // mm/day
    std::vector<double> tmin;  // degC
    std::vector<double> tmax;
    std::vector<double> tmean;
    std::vector<double> pet;  // mm/day

    std::size_t size() const { return dates.size(); }
};

struct ObservationSeries {
    std::vector<Date> dates;
    std::vector<double> q;          // mm/day, NaN where missing
    std::vector<std::uint8_t> mask;  // 1 where observed

    std::size_t size() const { return dates.size(); }
    std::size_t valid_count() const;
};

struct BasinRecord {
    std::string id;
    double latitude = 0.0;
    double area_km2 = 0.0;
    std::vector<double> attributes;                   // kAttributeCount values, categoricals as codes
    std::map<std::string, std::string> labels;        // categorical column -> label
    std::map<std::string, double> extra;              // additional numeric attribute columns
};

struct Basin {
    BasinRecord record;
    ForcingSeries forcing;
    ObservationSeries flow;
};

/// Categorical column -> sorted labels; a label's code is its index.
using Vocabulary = std::map<std::string, std::vector<std::string>>;

struct Coverage {
    std::string basin_id;
    std::size_t days = 0;
    std::size_t observed = 0;
    double fraction() const { return days ? static_cast<double>(observed) / static_cast<double>(days) : 0.0; }
};

enum class FlowUnits { Cfs, MmPerDay };

struct ManifestBasin {
    std::string id;
    double latitude = 0.0;
    double area_km2 = 0.0;
    std::filesystem::path forcing_path;
    std::filesystem::path flow_path;
};

struct Manifest {
    std::filesystem::path path;
    std::vector<ManifestBasin> basins;
    std::filesystem::path attributes_path;
    FlowUnits flow_units = FlowUnits::MmPerDay;
};

/// Reads the JSON manifest; relative paths resolve against its directory.
Manifest read_manifest(const std::filesystem::path& path);

/// Date-aligned collection: every basin's series covers [start, start + n_days).
struct Dataset {
    std::vector<Basin> basins;
    Vocabulary vocabulary;
    Date start;
    std::size_t n_days = 0;
    std::vector<Coverage> coverage;

    std::size_t basin_index(std::string_view id) const;
    /// Index of `d` on the common axis; throws DataError when outside it.
    std::size_t day_index(const Date& d) const;
    Date date_at(std::size_t i) const { return start.plus_days(static_cast<std::int64_t>(i)); }
};

/**
 * Loads and validates everything the manifest lists. When `vocabulary` is
 * given, categorical codes follow it (unknown labels are imputed like missing
 * values); otherwise it is built from the data.
 */
Dataset load_dataset(const std::filesystem::path& manifest_path, const Vocabulary* vocabulary = nullptr);

struct ValidationIssue {
    std::string basin_id;  // empty for manifest-level problems
    std::string message;
};

/// Runs every load-time check and collects failures instead of stopping at the first.
std::vector<ValidationIssue> validate_dataset(const std::filesystem::path& manifest_path);

/// Single-file readers, exposed for tools and tests.
ForcingSeries read_forcing(const std::filesystem::path& path, double latitude);
ObservationSeries read_flow(const std::filesystem::path& path, FlowUnits units, double area_km2);

/// Writes manifest.json, attributes.csv and per-basin forcing/flow CSVs under `dir`.
std::filesystem::path write_dataset(const std::filesystem::path& dir, const Dataset& ds);

}  // namespace dhbv::data
