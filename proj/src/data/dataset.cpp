#include "dhbv/data/dataset.hpp"

#include "dhbv/data/csv.hpp"
#include "dhbv/data/pet.hpp"
#include "dhbv/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

namespace dhbv::data {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

constexpr std::array<std::string_view, 3> kCategorical = {"dom_land_cover", "geol_class_1st", "geol_class_2nd"};

std::string where(const CsvTable& t, std::size_t row) {
    return t.source.string() + ":" + std::to_string(t.line_numbers[row]);
}

Date row_date(const CsvTable& t, std::size_t row, std::size_t col) {
    try {
        return parse_date(t.rows[row][col]);
    } catch (const DataError& e) {
        throw DataError(where(t, row) + ": " + e.what());
    }
}

}  // namespace

bool is_categorical_attribute(std::string_view name) {
    return std::find(kCategorical.begin(), kCategorical.end(), name) != kCategorical.end();
}

std::size_t attribute_index(std::string_view name) {
    for (std::size_t i = 0; i < kAttributeCount; ++i)
        if (kAttributeNames[i] == name) return i;
    throw std::invalid_argument("unknown attribute '" + std::string(name) + "'");
}

std::size_t ObservationSeries::valid_count() const {
    return static_cast<std::size_t>(std::count(mask.begin(), mask.end(), std::uint8_t{1}));
}

ForcingSeries read_forcing(const fs::path& path, double latitude) {
    const CsvTable t = read_csv(path);
    const std::size_t c_date = t.require("date"), c_p = t.require("prcp"), c_lo = t.require("tmin"),
                      c_hi = t.require("tmax");
    const auto c_mean = t.find("tmean");
    const auto c_pet = t.find("pet");
    ForcingSeries f;
    const std::size_t n = t.rows.size();
    if (n == 0) throw DataError(path.string() + ": no data rows");
    f.dates.reserve(n);
    for (std::size_t r = 0; r < n; ++r) {
        const Date d = row_date(t, r, c_date);
        if (!f.dates.empty()) {
            const auto step = days_between(f.dates.back(), d);
            if (step > 1) {
                throw DataError(where(t, r) + ": missing date " + f.dates.back().plus_days(1).to_string());
            }
            if (step < 1) throw DataError(where(t, r) + ": date " + d.to_string() + " out of order or duplicated");
        }
        const std::string w = where(t, r);
        const double p = parse_number(t.rows[r][c_p], w);
        const double lo = parse_number(t.rows[r][c_lo], w);
        const double hi = parse_number(t.rows[r][c_hi], w);
        if (!std::isfinite(p) || !std::isfinite(lo) || !std::isfinite(hi)) {
            throw DataError(w + ": missing forcing value on " + d.to_string());
        }
        if (p < 0.0) throw DataError(w + ": negative precipitation");
        if (hi < lo) throw DataError(w + ": tmax below tmin");
        double mean = c_mean ? parse_number(t.rows[r][*c_mean], w) : std::nan("");
        if (!std::isfinite(mean)) mean = 0.5 * (lo + hi);
        double pet = c_pet ? parse_number(t.rows[r][*c_pet], w) : std::nan("");
        if (!std::isfinite(pet)) pet = hargreaves_pet(lo, hi, mean, extraterrestrial_radiation(latitude, d.day_of_year()));
        if (pet < 0.0) throw DataError(w + ": negative pet");
        f.dates.push_back(d);
        f.prcp.push_back(p);
        f.tmin.push_back(lo);
        f.tmax.push_back(hi);
        f.tmean.push_back(mean);
        f.pet.push_back(pet);
    }
    return f;
}

ObservationSeries read_flow(const fs::path& path, FlowUnits units, double area_km2) {
    const CsvTable t = read_csv(path);
    const std::size_t c_date = t.require("date"), c_q = t.require("q");
    ObservationSeries o;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        const Date d = row_date(t, r, c_date);
        if (!o.dates.empty() && d <= o.dates.back()) {
            throw DataError(where(t, r) + ": date " + d.to_string() + " out of order or duplicated");
        }
        double q = parse_number(t.rows[r][c_q], where(t, r));
        if (std::isfinite(q)) {
            if (q < 0.0) throw DataError(where(t, r) + ": negative streamflow");
            if (units == FlowUnits::Cfs) q = cfs_to_mm_per_day(q, area_km2);
        }
        o.dates.push_back(d);
        o.q.push_back(q);
        o.mask.push_back(std::isfinite(q) ? 1 : 0);
    }
    return o;
}

Manifest read_manifest(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open manifest " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw DataError("manifest " + path.string() + ": " + e.what());
    }
    Manifest m;
    m.path = path;
    const fs::path base = path.parent_path();
    auto resolve = [&](const std::string& p) { return fs::path(p).is_absolute() ? fs::path(p) : base / p; };
    try {
        if (!j.contains("basins") || !j["basins"].is_array()) throw DataError("missing 'basins' array");
        if (j["basins"].empty()) throw DataError("manifest lists no basins");
        m.attributes_path = resolve(j.at("attributes_path").get<std::string>());
        const std::string units = j.value("flow_units", std::string("mm_day"));
        if (units == "cfs") {
            m.flow_units = FlowUnits::Cfs;
        } else if (units == "mm_day") {
            m.flow_units = FlowUnits::MmPerDay;
        } else {
            throw DataError("flow_units must be 'cfs' or 'mm_day', got '" + units + "'");
        }
        std::set<std::string> seen;
        for (const auto& b : j["basins"]) {
            ManifestBasin mb;
            mb.id = b.at("id").get<std::string>();
            mb.latitude = b.at("lat").get<double>();
            mb.area_km2 = b.at("area_km2").get<double>();
            mb.forcing_path = resolve(b.at("forcing_path").get<std::string>());
            mb.flow_path = resolve(b.at("flow_path").get<std::string>());
            if (!seen.insert(mb.id).second) throw DataError("duplicate basin id '" + mb.id + "'");
            if (!(std::abs(mb.latitude) <= 90.0)) throw DataError("basin " + mb.id + ": latitude out of range");
            if (!(mb.area_km2 > 0.0)) throw DataError("basin " + mb.id + ": area must be positive");
            m.basins.push_back(std::move(mb));
        }
    } catch (const json::exception& e) {
        throw DataError("manifest " + path.string() + ": " + e.what());
    } catch (const DataError& e) {
        throw DataError("manifest " + path.string() + ": " + e.what());
    }
    return m;
}

std::size_t Dataset::basin_index(std::string_view id) const {
    for (std::size_t i = 0; i < basins.size(); ++i)
        if (basins[i].record.id == id) return i;
    throw DataError("basin '" + std::string(id) + "' not in dataset");
}

std::size_t Dataset::day_index(const Date& d) const {
    const auto k = days_between(start, d);
    if (k < 0 || static_cast<std::size_t>(k) >= n_days) {
        throw DataError("date " + d.to_string() + " outside dataset period " + start.to_string() + " .. " +
                        date_at(n_days - 1).to_string());
    }
    return static_cast<std::size_t>(k);
}

namespace {

struct AttributeRows {
    CsvTable table;
    std::map<std::string, std::size_t> row_of;
    std::vector<std::string> extra_columns;
};

AttributeRows read_attributes(const fs::path& path) {
    AttributeRows a{read_csv(path), {}, {}};
    const std::size_t c_id = a.table.require("basin_id");
    for (auto name : kAttributeNames) a.table.require(name);
    for (const auto& h : a.table.header) {
        if (h == "basin_id") continue;
        if (std::find(kAttributeNames.begin(), kAttributeNames.end(), h) == kAttributeNames.end())
            a.extra_columns.push_back(h);
    }
    for (std::size_t r = 0; r < a.table.rows.size(); ++r) {
        if (!a.row_of.emplace(a.table.rows[r][c_id], r).second) {
            throw DataError(where(a.table, r) + ": duplicate basin_id '" + a.table.rows[r][c_id] + "'");
        }
    }
    return a;
}

BasinRecord basin_record(const ManifestBasin& mb, const AttributeRows& a) {
    auto it = a.row_of.find(mb.id);
    if (it == a.row_of.end()) throw DataError(a.table.source.string() + ": no attributes for basin");
    const std::size_t r = it->second;
    const auto& row = a.table.rows[r];
    BasinRecord rec;
    rec.id = mb.id;
    rec.latitude = mb.latitude;
    rec.area_km2 = mb.area_km2;
    rec.attributes.assign(kAttributeCount, std::nan(""));
    for (std::size_t i = 0; i < kAttributeCount; ++i) {
        const std::string& cell = row[*a.table.find(kAttributeNames[i])];
        if (is_categorical_attribute(kAttributeNames[i])) {
            if (!cell.empty() && cell != "NA") rec.labels[std::string(kAttributeNames[i])] = cell;
        } else {
            rec.attributes[i] = parse_number(cell, where(a.table, r));
        }
    }
    for (const auto& col : a.extra_columns) rec.extra[col] = parse_number(row[*a.table.find(col)], where(a.table, r));
    return rec;
}

void encode_and_impute(std::vector<Basin>& basins, Vocabulary& vocab, bool build_vocab) {
    if (build_vocab) {
        vocab.clear();
        for (auto name : kCategorical) {
            std::set<std::string> labels;
            for (const auto& b : basins) {
                auto it = b.record.labels.find(std::string(name));
                if (it != b.record.labels.end()) labels.insert(it->second);
            }
            vocab[std::string(name)] = {labels.begin(), labels.end()};
        }
    }
    for (auto& b : basins) {
        for (auto name : kCategorical) {
            auto it = b.record.labels.find(std::string(name));
            if (it == b.record.labels.end()) continue;
            const auto& labels = vocab[std::string(name)];
            auto pos = std::find(labels.begin(), labels.end(), it->second);
            if (pos != labels.end()) b.record.attributes[attribute_index(name)] = static_cast<double>(pos - labels.begin());
        }
    }
    for (std::size_t i = 0; i < kAttributeCount; ++i) {
        double sum = 0.0;
        std::size_t n = 0;
        for (const auto& b : basins) {
            if (std::isfinite(b.record.attributes[i])) {
                sum += b.record.attributes[i];
                ++n;
            }
        }
        const double fill = n ? sum / static_cast<double>(n) : 0.0;
        for (auto& b : basins)
            if (!std::isfinite(b.record.attributes[i])) b.record.attributes[i] = fill;
    }
}

void align(Dataset& ds) {
    Date first = ds.basins.front().forcing.dates.front();
    Date last = ds.basins.front().forcing.dates.back();
    for (const auto& b : ds.basins) {
        first = std::max(first, b.forcing.dates.front());
        last = std::min(last, b.forcing.dates.back());
    }
    if (last < first) throw DataError("basin forcing periods do not overlap");
    ds.start = first;
    ds.n_days = static_cast<std::size_t>(days_between(first, last)) + 1;
    for (auto& b : ds.basins) {
        auto& f = b.forcing;
        const auto off = static_cast<std::size_t>(days_between(f.dates.front(), first));
        auto cut = [&](auto& v) { v = {v.begin() + off, v.begin() + off + ds.n_days}; };
        cut(f.dates);
        cut(f.prcp);
        cut(f.tmin);
        cut(f.tmax);
        cut(f.tmean);
        cut(f.pet);

        ObservationSeries aligned;
        aligned.dates = f.dates;
        aligned.q.assign(ds.n_days, std::nan(""));
        aligned.mask.assign(ds.n_days, 0);
        for (std::size_t k = 0; k < b.flow.size(); ++k) {
            const auto idx = days_between(first, b.flow.dates[k]);
            if (idx < 0 || static_cast<std::size_t>(idx) >= ds.n_days || !b.flow.mask[k]) continue;
            aligned.q[idx] = b.flow.q[k];
            aligned.mask[idx] = 1;
        }
        b.flow = std::move(aligned);
        ds.coverage.push_back({b.record.id, ds.n_days, b.flow.valid_count()});
    }
}

}  // namespace

Dataset load_dataset(const fs::path& manifest_path, const Vocabulary* vocabulary) {
    const Manifest m = read_manifest(manifest_path);
    const AttributeRows attrs = read_attributes(m.attributes_path);
    Dataset ds;
    for (const auto& mb : m.basins) {
        try {
            Basin b;
            b.record = basin_record(mb, attrs);
            b.forcing = read_forcing(mb.forcing_path, mb.latitude);
            b.flow = read_flow(mb.flow_path, m.flow_units, mb.area_km2);
            ds.basins.push_back(std::move(b));
        } catch (const DataError& e) {
            throw DataError("basin " + mb.id + ": " + e.what());
        }
    }
    if (vocabulary) ds.vocabulary = *vocabulary;
    encode_and_impute(ds.basins, ds.vocabulary, vocabulary == nullptr);
    align(ds);
    return ds;
}

std::vector<ValidationIssue> validate_dataset(const fs::path& manifest_path) {
    std::vector<ValidationIssue> issues;
    Manifest m;
    AttributeRows attrs;
    try {
        m = read_manifest(manifest_path);
        attrs = read_attributes(m.attributes_path);
    } catch (const DataError& e) {
        issues.push_back({"", e.what()});
        return issues;
    }
    std::vector<Basin> ok;
    for (const auto& mb : m.basins) {
        auto check = [&](auto&& fn) {
            try {
                fn();
                return true;
            } catch (const DataError& e) {
                issues.push_back({mb.id, e.what()});
                return false;
            }
        };
        Basin b;
        const bool good = check([&] { b.record = basin_record(mb, attrs); }) &
                          check([&] { b.forcing = read_forcing(mb.forcing_path, mb.latitude); }) &
                          check([&] { b.flow = read_flow(mb.flow_path, m.flow_units, mb.area_km2); });
        if (good) ok.push_back(std::move(b));
    }
    if (issues.empty()) {
        try {
            Dataset ds;
            ds.basins = std::move(ok);
            encode_and_impute(ds.basins, ds.vocabulary, true);
            align(ds);
        } catch (const DataError& e) {
            issues.push_back({"", e.what()});
        }
    }
    return issues;
}

fs::path write_dataset(const fs::path& dir, const Dataset& ds) {
    fs::create_directories(dir / "forcing");
    fs::create_directories(dir / "flow");
    json manifest;
    manifest["attributes_path"] = "attributes.csv";
    manifest["flow_units"] = "mm_day";
    manifest["basins"] = json::array();

    std::vector<std::string> header{"basin_id"};
    for (auto n : kAttributeNames) header.emplace_back(n);
    std::set<std::string> extras;
    for (const auto& b : ds.basins)
        for (const auto& [k, v] : b.record.extra) extras.insert(k);
    header.insert(header.end(), extras.begin(), extras.end());
    CsvWriter attrs(header);

    for (const auto& b : ds.basins) {
        const auto& r = b.record;
        const std::string forcing_rel = "forcing/" + r.id + ".csv";
        const std::string flow_rel = "flow/" + r.id + ".csv";
        manifest["basins"].push_back(
            {{"id", r.id}, {"lat", r.latitude}, {"area_km2", r.area_km2}, {"forcing_path", forcing_rel},
             {"flow_path", flow_rel}});

        CsvWriter fw({"date", "prcp", "tmin", "tmax", "tmean", "pet"});
        const auto& f = b.forcing;
        for (std::size_t t = 0; t < f.size(); ++t) {
            fw.add_row({f.dates[t].to_string(), format_number(f.prcp[t]), format_number(f.tmin[t]),
                        format_number(f.tmax[t]), format_number(f.tmean[t]), format_number(f.pet[t])});
        }
        fw.write(dir / forcing_rel);

        CsvWriter qw({"date", "q"});
        for (std::size_t t = 0; t < b.flow.size(); ++t)
            qw.add_row({b.flow.dates[t].to_string(), b.flow.mask[t] ? format_number(b.flow.q[t]) : ""});
        qw.write(dir / flow_rel);

        std::vector<std::string> row{r.id};
        for (std::size_t i = 0; i < kAttributeCount; ++i) {
            const std::string name(kAttributeNames[i]);
            if (is_categorical_attribute(name)) {
                auto it = r.labels.find(name);
                row.push_back(it != r.labels.end() ? it->second : "");
            } else {
                row.push_back(format_number(r.attributes[i]));
            }
        }
        for (const auto& k : extras) {
            auto it = r.extra.find(k);
            row.push_back(it != r.extra.end() ? format_number(it->second) : "");
        }
        attrs.add_row(std::move(row));
    }
    attrs.write(dir / "attributes.csv");
    const fs::path mpath = dir / "manifest.json";
    std::ofstream out(mpath);
    if (!out) throw DataError("cannot write " + mpath.string());
    out << manifest.dump(2) << '\n';
    return mpath;
}

}  // namespace dhbv::data
