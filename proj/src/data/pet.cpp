#include "dhbv/data/pet.hpp"

#include "dhbv/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace dhbv::data {

namespace {

constexpr double kFt3ToM3 = 0.0283168;
constexpr double kSecondsPerDay = 86400.0;

double depth_factor(double area_km2) {
    if (!(area_km2 > 0.0)) throw DataError("basin area must be positive, got " + std::to_string(area_km2));
    return kFt3ToM3 * kSecondsPerDay / (area_km2 * 1e6) * 1000.0;
}

}  // namespace

double extraterrestrial_radiation(double latitude_deg, int day_of_year) {
    if (!(std::abs(latitude_deg) < kMaxAbsLatitude)) {
        throw DataError("extraterrestrial_radiation: latitude " + std::to_string(latitude_deg) +
                        " outside supported range (|lat| < 66.5)");
    }
    using std::numbers::pi;
    const double phi = latitude_deg * pi / 180.0;
    const double j = 2.0 * pi * day_of_year / 365.0;
    const double dr = 1.0 + 0.033 * std::cos(j);
    const double decl = 0.409 * std::sin(j - 1.39);
    const double ws = std::acos(std::clamp(-std::tan(phi) * std::tan(decl), -1.0, 1.0));
    return 24.0 * 60.0 / pi * kSolarConstant * dr *
           (ws * std::sin(phi) * std::sin(decl) + std::cos(phi) * std::cos(decl) * std::sin(ws));
}

double hargreaves_pet(double t_min, double t_max, double t_mean, double ra) {
    if (t_max < t_min) {
        throw DataError("hargreaves_pet: T_max (" + std::to_string(t_max) + ") below T_min (" +
                        std::to_string(t_min) + ")");
    }
    return std::max(0.0, 0.0023 * 0.408 * ra * (t_mean + 17.8) * std::sqrt(t_max - t_min));
}

double cfs_to_mm_per_day(double q_cfs, double area_km2) { return q_cfs * depth_factor(area_km2); }

double mm_per_day_to_cfs(double q_mm, double area_km2) { return q_mm / depth_factor(area_km2); }

}  // namespace dhbv::data
