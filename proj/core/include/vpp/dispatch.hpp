#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <vector>

#include "vpp/milp.hpp"
#include "vpp/model.hpp"

namespace vpp {

/// Plant state at the start of a planning horizon.
struct InitialState {
  double soc = 0.5;
  bool chp_on = false;
  Minutes chp_time_in_state = 0;        // time since the last effective start (on) or stop (off)
  Minutes chp_starting_remaining = 0;   // > 0 while a start is in progress
  double prev_chp_power = 0.0;          // kW during the previous step
};

/// Throws ValidationError when `init` contradicts itself or the unit limits.
void validate_initial_state(const InitialState& init, const UnitParams& unit);

/// Column indices of every decision variable, one entry per grid segment
/// (soc has segments + 1 entries: soc[0] is the fixed initial state).
struct DispatchLayout {
  std::vector<std::size_t> p_chp, p_dis, p_ch, p_curtail, p_draw, p_feed, p_lost;
  std::vector<std::size_t> soc;
  std::vector<std::size_t> u, v, w;
  /// effect[k]: segment at which a start requested at segment k produces
  /// power, or `none` when that lies beyond the horizon.
  std::vector<std::size_t> start_effect;
  static constexpr std::size_t none = static_cast<std::size_t>(-1);
};

struct DispatchProblem {
  milp::LinearProblem lp;
  DispatchLayout layout;
  TimeGrid grid;
  std::vector<double> demand;  // forecast per segment
  std::vector<double> res;     // forecast availability per segment
  InitialState init;
  bool battery_enabled = true;
};

/// Assembles the unit-commitment MILP over `grid`: balance, SOC recursion,
/// semi-continuous CHP, grid and RES bounds, ramps, delayed start-up logic
/// and wall-clock minimum up/down windows. Costs follow the scenario prices.
DispatchProblem build_dispatch_problem(const ScenarioConfig& scenario,
                                       const std::vector<double>& demand_forecast,
                                       const std::vector<double>& res_forecast,
                                       const InitialState& init, const TimeGrid& grid,
                                       bool battery_enabled);

struct DispatchSchedule {
  TimeGrid grid;
  std::vector<double> p_chp;
  std::vector<double> p_batt;  // discharge > 0
  std::vector<double> p_charge;
  std::vector<double> p_discharge;
  std::vector<double> p_res_used;
  std::vector<double> p_curtail;
  std::vector<double> p_grid_draw;
  std::vector<double> p_grid_feed;
  std::vector<double> p_lost;
  std::vector<double> served_demand;
  std::vector<double> soc;  // segments + 1
  std::vector<int> u, v, w;
  double objective = 0.0;

  std::size_t segments() const noexcept { return p_chp.size(); }
};

/// Throws std::invalid_argument unless `solution` is Optimal.
DispatchSchedule extract_dispatch(const DispatchProblem& problem, const milp::Solution& solution);

struct Command {
  double p_chp = 0.0;
  double p_batt = 0.0;  // discharge > 0
  double p_res_used = 0.0;
  double p_curtail = 0.0;
  double p_grid = 0.0;  // draw > 0, feed-in < 0
  double p_lost = 0.0;
  bool start_chp = false;
  bool stop_chp = false;
};

bool operator==(const Command& a, const Command& b);

/// Segment-0 setpoints and the start/stop decision effective now.
Command first_step_command(const DispatchSchedule& schedule);

/// Planned cost of segment 0 at the scenario prices (EUR).
double first_step_cost(const DispatchSchedule& schedule, const ScenarioConfig& scenario);

/// `t_min,dt_min,p_chp_kw,p_batt_kw,p_res_kw,p_curtail_kw,p_grid_kw,soc,u,v,w`
void write_schedule_csv(std::ostream& out, const DispatchSchedule& schedule);

}  // namespace vpp
