#pragma once

#include <cstddef>
#include <filesystem>
#include <limits>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "vpp/errors.hpp"

namespace vpp {

/// Minutes since simulation start. All clock arithmetic is integral.
using Minutes = int;

inline constexpr double kUnlimited = std::numeric_limits<double>::infinity();

/// One controllable generating unit (the CHP in the reference scenario).
struct UnitParams {
  std::string name = "chp";
  double p_min = 0.0;  // kW while committed
  double p_max = 0.0;  // kW
  double ramp_up = kUnlimited;    // kW per dt_opt step
  double ramp_down = kUnlimited;  // kW per dt_opt step
  Minutes min_uptime = 0;
  Minutes min_downtime = 0;
  Minutes startup_time = 0;
  double kappa_gen = 0.0;    // EUR/kWh
  double kappa_start = 0.0;  // EUR per start
};

struct ScenarioConfig {
  UnitParams chp;
  double res_p_max = 0.0;
  double demand_p_max = 0.0;
  double grid_p_max = 0.0;  // symmetric draw / feed-in limit
  double battery_capacity = 0.0;  // kWh
  double battery_p_max = 0.0;
  double kappa_batt = 0.0;  // EUR per kWh discharged
  double kappa_grid_draw = 0.0;
  double kappa_grid_feedin = 0.0;  // revenue
  double kappa_res_curtail = 0.0;
  Minutes horizon = 0;
  std::vector<Minutes> control_points;
  Minutes dt_opt = 5;
  double lost_load_penalty = 10.0;
  double initial_soc = 0.5;  // battery SOC at simulation start
};

/// Reference scenario: CHP 6-20 kW, 15 min startup, 20/15 min up/down,
/// 10 kW grid, 20 kWh / 20 kW battery, variable grid over 15 h.
ScenarioConfig reference_scenario();

/// Default control points (minutes from now). Fine 5 min steps up to 15 min,
/// then 15, 30, 60 and 180 min increments out to 900 min.
std::vector<Minutes> default_control_points();

/// All invariant violations of `config`, each prefixed with its field name.
/// Empty when the config is valid.
std::vector<std::string> scenario_violations(const ScenarioConfig& config);

/// Returns `raw` unchanged when valid; throws ValidationError listing every
/// violated invariant otherwise.
ScenarioConfig validate_scenario(ScenarioConfig raw);

/// Parses the structured-text (JSON) scenario format. Keys mirror the
/// ScenarioConfig field names; missing keys keep the reference values.
ScenarioConfig scenario_from_json(const nlohmann::json& doc);
nlohmann::json scenario_to_json(const ScenarioConfig& config);
ScenarioConfig load_scenario(const std::filesystem::path& path);

/// Absolute optimization grid starting at `start`.
struct TimeGrid {
  std::vector<Minutes> points;  // absolute, size = segments + 1
  std::vector<Minutes> steps;   // points[i+1] - points[i]

  std::size_t segments() const noexcept { return steps.size(); }
  Minutes start() const { return points.front(); }
  Minutes end() const { return points.back(); }
  Minutes horizon() const { return end() - start(); }
  double step_hours(std::size_t i) const { return steps[i] / 60.0; }
};

TimeGrid build_time_grid(const ScenarioConfig& config, Minutes now);

/// Fine-resolution demand and RES availability. Sample i holds over
/// [times[i], times[i] + dt).
struct Profile {
  std::vector<Minutes> times;
  std::vector<double> demand;         // kW
  std::vector<double> res_available;  // kW
  Minutes dt = 5;

  std::size_t size() const noexcept { return times.size(); }
  /// One past the last covered minute.
  Minutes end() const { return times.empty() ? 0 : times.back() + dt; }
  std::size_t index_of(Minutes t) const;
};

/// Checks spacing and the scenario's demand / RES limits.
void validate_profile(const Profile& profile, const ScenarioConfig& config);

/// Reads `time_min,demand_kw,res_kw`. Throws ValidationError with file:line.
Profile load_profile_csv(const std::filesystem::path& path, Minutes dt_opt);
void write_profile_csv(const std::filesystem::path& path, const Profile& profile);

/// Per-segment averages of a profile over a grid.
struct SegmentSeries {
  std::vector<double> demand;
  std::vector<double> res;
};

/// Energy-preserving resampling: each segment carries the mean of the fine
/// series over that segment. Throws CoverageError naming the missing interval.
SegmentSeries resample_profile(const Profile& profile, const TimeGrid& grid);

/// Mean over each grid segment of a step series whose value `values[k]`
/// holds over [knots[k], knots[k+1]) and the last value over
/// [knots.back(), tail_end). Knots must be strictly increasing.
std::vector<double> step_series_means(const std::vector<Minutes>& knots,
                                      const std::vector<double>& values, Minutes tail_end,
                                      const TimeGrid& grid);

}  // namespace vpp
