#pragma once

#include "dhbv/data/calendar.hpp"
#include "dhbv/hbv/model.hpp"

#include <array>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace dhbv::data {

/**
 * Simulation CSV columns after `date`, in file order: forcing, the five
 * storages (end of day), the daily fluxes, routed flow, and the beta/gamma
 * values in effect that day (gamma is blank for dpl_hbv).
 */
inline constexpr std::array<std::string_view, 24> kSimulationColumns = {
    "P",    "T",     "E_p",   "S_p",   "S_liq", "S_s", "S_uz", "S_lz", "P_s", "P_r",      "S_melt", "R_fz",
    "I_snow", "P_eff", "E_x", "E_T", "P_erc", "Q0",  "Q1",   "Q2",   "Q",   "Q_routed", "beta",   "gamma",
};

/// One basin's simulated days, column-major.
struct BasinSimulation {
    std::string basin_id;
    std::vector<Date> dates;
    std::map<std::string, std::vector<double>, std::less<>> columns;

    std::size_t size() const { return dates.size(); }
    /// Throws DataError when the column is absent.
    const std::vector<double>& column(std::string_view name) const;
};

/**
 * Pulls basin `basin` out of a batched rollout for days [begin, end).
 * `rollout`, `routed`, `forcing` and `dynamic` are indexed by the same
 * absolute day; `first_date` is the date of day 0.
 */
BasinSimulation extract_basin(const std::string& id, const Date& first_date,
                              const std::vector<hbv::DayForcing>& forcing, const hbv::Rollout<ad::Tensor>& rollout,
                              const std::vector<ad::Tensor>& routed, const hbv::HbvParams<ad::Tensor>& params,
                              const hbv::DynamicParams<ad::Tensor>& dynamic, hbv::Variant variant, std::size_t basin,
                              std::size_t begin, std::size_t end);

/// Writes the kSimulationColumns present in `sim`, in that order; Q_routed is required.
void write_simulation_csv(const std::filesystem::path& path, const BasinSimulation& sim);
BasinSimulation read_simulation_csv(const std::filesystem::path& path, const std::string& basin_id = {});

}  // namespace dhbv::data
