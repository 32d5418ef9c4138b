#pragma once

namespace dhbv::data {

/// Solar constant, MJ m^-2 min^-1.
inline constexpr double kSolarConstant = 0.0820;
/// Latitudes at or beyond this magnitude are rejected (polar day/night).
inline constexpr double kMaxAbsLatitude = 66.5;

/// Daily extraterrestrial radiation Ra (MJ m^-2 day^-1) from latitude (deg) and day of year.
double extraterrestrial_radiation(double latitude_deg, int day_of_year);

/**
 * Hargreaves potential ET (mm/day):
 *   max(0, 0.0023 * 0.408 Ra * (T_mean + 17.8) * sqrt(T_max - T_min)).
 */
double hargreaves_pet(double t_min, double t_max, double t_mean, double ra);

/// Streamflow in ft^3/s to basin depth in mm/day.
double cfs_to_mm_per_day(double q_cfs, double area_km2);
double mm_per_day_to_cfs(double q_mm, double area_km2);

}  // namespace dhbv::data
