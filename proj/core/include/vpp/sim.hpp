#pragma once

#include <cstdint>
#include <deque>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "vpp/dispatch.hpp"
#include "vpp/milp.hpp"
#include "vpp/model.hpp"
#include "vpp/uncertainty.hpp"

namespace vpp {

enum class ChpMode { Off, Starting, On };

const char* to_string(ChpMode mode);

struct ChpState {
  ChpMode mode = ChpMode::Off;
  Minutes time_in_state = 24 * 60;  // time since the effective stop (Off) or start (On)
  Minutes remaining = 0;            // Starting only
};

struct CommitmentRecord {
  Minutes t = 0;
  int u = 0, v = 0, w = 0;
};

struct SimState {
  Minutes clock = 0;
  double soc = 0.5;
  ChpState chp;
  double prev_chp_power = 0.0;
  /// Trailing commitment history, trimmed to the longest of min-up,
  /// min-down and startup time.
  std::deque<CommitmentRecord> history;
};

/// Planner view of the plant state.
InitialState initial_state_of(const SimState& state);

/// One applied dt_opt step.
struct StepRecord {
  Minutes t = 0;
  double demand = 0.0;
  double res_available = 0.0;
  double p_chp = 0.0;
  double p_charge = 0.0;
  double p_discharge = 0.0;
  double p_res_used = 0.0;
  double p_curtail = 0.0;
  double p_grid_draw = 0.0;
  double p_grid_feed = 0.0;
  double p_lost = 0.0;
  double soc = 0.0;  // after the step
  ChpMode chp_mode = ChpMode::Off;
  bool chp_started = false;  // a start request was accepted this step

  double p_batt() const { return p_discharge - p_charge; }
  double p_grid() const { return p_grid_draw - p_grid_feed; }
  /// generation + discharge + draw - demand served - charge - feed-in
  double balance_residual() const;
};

struct CostLedger {
  double grid_draw_kwh = 0.0, grid_draw_eur = 0.0;
  double grid_feed_kwh = 0.0, grid_feed_eur = 0.0;  // revenue, booked negative
  double chp_kwh = 0.0, chp_eur = 0.0;
  int chp_starts = 0;
  double chp_start_eur = 0.0;
  double battery_kwh = 0.0, battery_eur = 0.0;  // discharged energy
  double curtail_kwh = 0.0, curtail_eur = 0.0;
  double lost_kwh = 0.0, lost_eur = 0.0;
  double total_eur = 0.0;

  double component_sum() const;
};

/// Energy = sum of power * dt_opt; money at the scenario prices.
CostLedger account_costs(const std::vector<StepRecord>& trajectory, const ScenarioConfig& scenario);

struct ApplyResult {
  SimState state;
  StepRecord record;
  std::vector<std::string> violations;
};

/// Plant emulation for one dt_opt step: CHP start/stop state machine, then
/// real-time balancing of the mismatch between command and truth.
/// Deficit: release planned curtailment, battery, grid, lost load.
/// Surplus: planned grid draw, battery, grid feed-in, curtailment, CHP
/// turndown to p_min.
ApplyResult apply_command(const SimState& state, const Command& command, double true_demand,
                          double true_res, const ScenarioConfig& scenario, bool battery_enabled);

struct RunSpec {
  ForecastPolicy policy = PerfectForecast{};
  bool battery_enabled = true;
  std::uint64_t seed = 0;
  ErrorModel error_model;  // norm is recalibrated on the scenario grid
  milp::SolverOptions solver;
  Minutes duration = 24 * 60;
};

struct MpcOutcome {
  Command command;
  bool solved = false;
  milp::SolveStatus status = milp::SolveStatus::Infeasible;
  milp::SolveStats stats;
  double planned_cost = 0.0;  // first-step cost of the plan; 0 on fallback
  double max_residual = 0.0;  // check_feasible on the optimal point
  std::optional<DispatchSchedule> schedule;
  std::string diagnostic;
};

/// One MPC iteration: grid at state.clock, forecasts per policy, MILP solve,
/// first-step command. On solver failure returns the fallback command:
/// CHP holds its state and power, battery idle, grid balances.
/// `model.norm` must already be calibrated.
MpcOutcome mpc_step(const SimState& state, const ScenarioConfig& scenario, const Profile& truth,
                    const RunSpec& spec, const ErrorModel& model, std::uint64_t step);

/// Solver statistics over one run.
struct SolverSummary {
  int solves = 0;
  int failures = 0;
  std::int64_t nodes = 0;
  std::int64_t iterations = 0;
  double total_ms = 0.0;
  double median_ms = 0.0;
  double max_ms = 0.0;
  double max_residual = 0.0;
};

struct RunResult {
  CostLedger ledger;
  std::vector<StepRecord> trajectory;
  SolverSummary solver;
  std::vector<std::string> violations;
  double planned_cost = 0.0;  // sum of first-step plan costs
  double wall_ms = 0.0;
};

/// Runs `spec.duration / dt_opt` MPC iterations from the scenario initial
/// state. Throws CoverageError when `truth` ends before the last horizon.
RunResult simulate_day(const ScenarioConfig& scenario, const Profile& truth, const RunSpec& spec);

/// `t_min,p_chp_kw,p_batt_kw,p_res_kw,p_curtail_kw,p_grid_kw,p_lost_kw,soc,chp_state`
void write_trajectory_csv(std::ostream& out, const std::vector<StepRecord>& trajectory);

/// Column names of the ledger part of a ledger CSV row, in write order.
const std::vector<std::string>& ledger_columns();
std::vector<double> ledger_values(const CostLedger& ledger);

}  // namespace vpp
