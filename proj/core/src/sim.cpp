#include "vpp/sim.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ostream>
#include <variant>

#include "csv.hpp"
#include "vpp/errors.hpp"

namespace vpp {

const char* to_string(ChpMode mode) {
  switch (mode) {
    case ChpMode::Off:
      return "off";
    case ChpMode::Starting:
      return "starting";
    case ChpMode::On:
      return "on";
  }
  return "unknown";
}

InitialState initial_state_of(const SimState& s) {
  InitialState init;
  init.soc = s.soc;
  init.chp_on = s.chp.mode == ChpMode::On;
  init.chp_time_in_state = s.chp.mode == ChpMode::Starting ? 0 : s.chp.time_in_state;
  init.chp_starting_remaining = s.chp.mode == ChpMode::Starting ? s.chp.remaining : 0;
  init.prev_chp_power = init.chp_on ? s.prev_chp_power : 0.0;
  return init;
}

double StepRecord::balance_residual() const {
  return p_chp + p_discharge + p_res_used + p_grid_draw + p_lost - demand - p_charge - p_grid_feed;
}

double CostLedger::component_sum() const {
  return grid_draw_eur + grid_feed_eur + chp_eur + chp_start_eur + battery_eur + curtail_eur + lost_eur;
}

CostLedger account_costs(const std::vector<StepRecord>& trajectory, const ScenarioConfig& sc) {
  const double h = sc.dt_opt / 60.0;
  CostLedger L;
  for (const StepRecord& r : trajectory) {
    L.grid_draw_kwh += r.p_grid_draw * h;
    L.grid_feed_kwh += r.p_grid_feed * h;
    L.chp_kwh += r.p_chp * h;
    L.battery_kwh += r.p_discharge * h;
    L.curtail_kwh += r.p_curtail * h;
    L.lost_kwh += r.p_lost * h;
    if (r.chp_started) ++L.chp_starts;
  }
  L.grid_draw_eur = sc.kappa_grid_draw * L.grid_draw_kwh;
  L.grid_feed_eur = -sc.kappa_grid_feedin * L.grid_feed_kwh;
  L.chp_eur = sc.chp.kappa_gen * L.chp_kwh;
  L.chp_start_eur = sc.chp.kappa_start * L.chp_starts;
  L.battery_eur = sc.kappa_batt * L.battery_kwh;
  L.curtail_eur = sc.kappa_res_curtail * L.curtail_kwh;
  L.lost_eur = sc.lost_load_penalty * L.lost_kwh;
  L.total_eur = L.component_sum();
  return L;
}

ApplyResult apply_command(const SimState& state, const Command& cmd, double demand, double res,
                          const ScenarioConfig& sc, bool battery_enabled) {
  ApplyResult out;
  out.state = state;
  SimState& s = out.state;
  StepRecord& rec = out.record;
  const UnitParams& unit = sc.chp;
  const Minutes dt = sc.dt_opt;
  const double h = dt / 60.0;
  auto log = [&](const std::string& what) {
    out.violations.push_back("t=" + std::to_string(s.clock) + ": " + what);
  };

  bool stopped = false;
  if (cmd.stop_chp) {
    if (s.chp.mode == ChpMode::On) {
      if (s.chp.time_in_state >= unit.min_uptime) {
        s.chp = {ChpMode::Off, 0, 0};
        stopped = true;
      } else {
        log("stop deferred, unit on for " + std::to_string(s.chp.time_in_state) + " min < min_uptime");
      }
    } else if (s.chp.mode == ChpMode::Starting) {
      log("stop ignored while starting");
    }
  }
  if (cmd.start_chp) {
    if (s.chp.mode == ChpMode::Off) {
      if (s.chp.time_in_state + unit.startup_time >= unit.min_downtime) {
        s.chp = unit.startup_time > 0 ? ChpState{ChpMode::Starting, 0, unit.startup_time}
                                      : ChpState{ChpMode::On, 0, 0};
        rec.chp_started = true;
      } else {
        log("start deferred, unit off for " + std::to_string(s.chp.time_in_state) + " min");
      }
    } else if (s.chp.mode == ChpMode::On) {
      log("start ignored, unit already on");
    }
  }

  double chp = s.chp.mode == ChpMode::On ? std::clamp(cmd.p_chp, unit.p_min, unit.p_max) : 0.0;
  double dis_max = 0.0, ch_max = 0.0;
  if (battery_enabled) {
    dis_max = std::min(sc.battery_p_max, s.soc * sc.battery_capacity / h);
    ch_max = std::min(sc.battery_p_max, (1.0 - s.soc) * sc.battery_capacity / h);
  }
  const double g_max = sc.grid_p_max;
  double batt = std::clamp(cmd.p_batt, -ch_max, dis_max);
  double curtail = std::clamp(cmd.p_curtail, 0.0, res);
  double grid = std::clamp(cmd.p_grid, -g_max, g_max);
  double lost = 0.0;

  const double net = chp + (res - curtail) + batt + grid - demand;
  if (net < 0.0) {
    double d = -net;
    double take = std::min(d, curtail);
    curtail -= take;
    d -= take;
    take = std::min(d, dis_max - batt);
    batt += take;
    d -= take;
    take = std::min(d, g_max - grid);
    grid += take;
    d -= take;
    if (d > 1e-9) log("lost load " + csv::number(d) + " kW");
    lost = d;
  } else if (net > 0.0) {
    double e = net;
    double take = std::min(e, std::max(0.0, grid));
    grid -= take;
    e -= take;
    take = std::min(e, batt + ch_max);
    batt -= take;
    e -= take;
    take = std::min(e, grid + g_max);
    grid -= take;
    e -= take;
    take = std::min(e, res - curtail);
    curtail += take;
    e -= take;
    if (s.chp.mode == ChpMode::On) {
      take = std::min(e, chp - unit.p_min);
      chp -= take;
      e -= take;
    }
    if (e > 1e-9) {
      log("surplus " + csv::number(e) + " kW not absorbable, unit tripped below p_min");
      chp -= std::min(e, chp);
    }
  }

  rec.t = s.clock;
  rec.demand = demand;
  rec.res_available = res;
  rec.p_chp = chp;
  rec.p_discharge = std::max(0.0, batt);
  rec.p_charge = std::max(0.0, -batt);
  rec.p_curtail = curtail;
  rec.p_res_used = res - curtail;
  rec.p_grid_draw = std::max(0.0, grid);
  rec.p_grid_feed = std::max(0.0, -grid);
  rec.p_lost = lost;
  rec.chp_mode = s.chp.mode;
  if (battery_enabled) {
    s.soc = std::clamp(s.soc + h * (rec.p_charge - rec.p_discharge) / sc.battery_capacity, 0.0, 1.0);
  }
  rec.soc = s.soc;

  const int on = s.chp.mode == ChpMode::On ? 1 : 0;
  s.history.push_back({s.clock, on, rec.chp_started ? 1 : 0, stopped ? 1 : 0});
  const Minutes keep = std::max({unit.min_uptime, unit.min_downtime, unit.startup_time, dt});
  while (!s.history.empty() && s.history.front().t <= s.clock - keep) s.history.pop_front();

  switch (s.chp.mode) {
    case ChpMode::Starting:
      s.chp.remaining -= dt;
      if (s.chp.remaining <= 0) s.chp = {ChpMode::On, 0, 0};
      break;
    case ChpMode::On:
    case ChpMode::Off:
      s.chp.time_in_state += dt;
      break;
  }
  s.prev_chp_power = chp;
  s.clock += dt;
  return out;
}

MpcOutcome mpc_step(const SimState& state, const ScenarioConfig& sc, const Profile& truth,
                    const RunSpec& spec, const ErrorModel& model, std::uint64_t step) {
  const TimeGrid grid = build_time_grid(sc, state.clock);
  SegmentSeries fc;
  const std::vector<double> leads = segment_leads(grid);
  if (const auto* ext = std::get_if<ExternalForecast>(&spec.policy)) {
    if (!ext->table) throw ValidationError("external forecast policy without data");
    fc = external_forecast(*ext->table, grid);
  } else {
    fc = resample_profile(truth, grid);
    const auto* syn = std::get_if<SyntheticForecast>(&spec.policy);
    if (syn && syn->target_rmse > 0.0) {
      const double s = syn->target_rmse;
      auto rng_d = forecast_rng(spec.seed, step, 0);
      auto rng_r = forecast_rng(spec.seed, step, 1);
      fc.demand = synthesize_forecast(fc.demand, leads, sc.demand_p_max, model, s, rng_d);
      fc.res = synthesize_forecast(fc.res, leads, sc.res_p_max, model, s, rng_r);
    }
    if (const auto* wc = std::get_if<WorstCaseForecast>(&spec.policy)) {
      Envelope env =
          worst_case_envelope(fc.demand, fc.res, leads, model, wc->target_rmse * wc->margin_scale, sc);
      fc.demand = std::move(env.demand);
      fc.res = std::move(env.res);
    }
  }

  MpcOutcome out;
  const DispatchProblem dp =
      build_dispatch_problem(sc, fc.demand, fc.res, initial_state_of(state), grid, spec.battery_enabled);
  const milp::Solution sol = milp::solve_milp(dp.lp, spec.solver);
  out.status = sol.status;
  out.stats = sol.stats;
  if (sol.optimal()) {
    out.solved = true;
    out.max_residual = milp::check_feasible(dp.lp, sol.values).max_residual();
    out.schedule = extract_dispatch(dp, sol);
    out.command = first_step_command(*out.schedule);
    out.planned_cost = first_step_cost(*out.schedule, sc);
  } else {
    out.diagnostic = "t=" + std::to_string(state.clock) + ": solver " + milp::to_string(sol.status) +
                     ", fallback command";
    Command& c = out.command;
    c.p_chp = state.chp.mode == ChpMode::On ? state.prev_chp_power : 0.0;
    const double res0 = std::max(0.0, fc.res[0]);
    const double need = std::max(0.0, fc.demand[0]) - res0 - c.p_chp;
    c.p_grid = std::clamp(need, -sc.grid_p_max, sc.grid_p_max);
    c.p_curtail = std::min(res0, std::max(0.0, c.p_grid - need));
    c.p_res_used = res0 - c.p_curtail;
  }
  return out;
}

RunResult simulate_day(const ScenarioConfig& sc, const Profile& truth, const RunSpec& spec) {
  const auto start = std::chrono::steady_clock::now();
  if (spec.duration <= 0 || spec.duration % sc.dt_opt != 0) {
    throw ValidationError("simulation duration must be a positive multiple of dt_opt");
  }
  const Minutes needed = spec.duration + sc.horizon;
  if (truth.size() == 0 || truth.times.front() > 0) throw CoverageError(0, needed);
  if (truth.end() < needed) throw CoverageError(truth.end(), needed);
  if (truth.dt != sc.dt_opt) throw ValidationError("profile spacing differs from dt_opt");

  ErrorModel model = spec.error_model;
  model.norm = calibrate_norm(model, segment_leads(build_time_grid(sc, 0)));

  RunResult run;
  SimState state;
  state.soc = sc.initial_soc;
  std::vector<double> solve_ms;
  const auto steps = static_cast<std::uint64_t>(spec.duration / sc.dt_opt);
  run.trajectory.reserve(steps);
  for (std::uint64_t k = 0; k < steps; ++k) {
    const MpcOutcome mpc = mpc_step(state, sc, truth, spec, model, k);
    ++run.solver.solves;
    run.solver.nodes += mpc.stats.nodes;
    run.solver.iterations += mpc.stats.iterations;
    run.solver.total_ms += mpc.stats.wall_ms;
    solve_ms.push_back(mpc.stats.wall_ms);
    if (mpc.solved) {
      run.solver.max_residual = std::max(run.solver.max_residual, mpc.max_residual);
      run.planned_cost += mpc.planned_cost;
    } else {
      ++run.solver.failures;
      run.violations.push_back(mpc.diagnostic);
    }
    const std::size_t i = truth.index_of(state.clock);
    ApplyResult applied =
        apply_command(state, mpc.command, truth.demand[i], truth.res_available[i], sc, spec.battery_enabled);
    for (auto& v : applied.violations) run.violations.push_back(std::move(v));
    run.trajectory.push_back(applied.record);
    state = std::move(applied.state);
  }
  if (!solve_ms.empty()) {
    std::sort(solve_ms.begin(), solve_ms.end());
    const std::size_t n = solve_ms.size();
    run.solver.median_ms = n % 2 ? solve_ms[n / 2] : 0.5 * (solve_ms[n / 2 - 1] + solve_ms[n / 2]);
    run.solver.max_ms = solve_ms.back();
  }
  run.ledger = account_costs(run.trajectory, sc);
  run.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return run;
}

void write_trajectory_csv(std::ostream& out, const std::vector<StepRecord>& trajectory) {
  out << "t_min,p_chp_kw,p_batt_kw,p_res_kw,p_curtail_kw,p_grid_kw,p_lost_kw,soc,chp_state\n";
  for (const StepRecord& r : trajectory) {
    out << r.t << ',' << csv::number(r.p_chp) << ',' << csv::number(r.p_batt()) << ','
        << csv::number(r.p_res_used) << ',' << csv::number(r.p_curtail) << ',' << csv::number(r.p_grid())
        << ',' << csv::number(r.p_lost) << ',' << csv::number(r.soc) << ',' << to_string(r.chp_mode) << '\n';
  }
}

const std::vector<std::string>& ledger_columns() {
  static const std::vector<std::string> cols{
      "grid_draw_kwh", "grid_draw_eur", "grid_feed_kwh", "grid_feed_eur", "chp_kwh",
      "chp_eur",       "chp_starts",    "chp_start_eur", "battery_kwh",   "battery_eur",
      "curtail_kwh",   "curtail_eur",   "lost_kwh",      "lost_eur",      "total_eur"};
  return cols;
}

std::vector<double> ledger_values(const CostLedger& L) {
  return {L.grid_draw_kwh, L.grid_draw_eur, L.grid_feed_kwh, L.grid_feed_eur,
          L.chp_kwh,       L.chp_eur,       static_cast<double>(L.chp_starts),
          L.chp_start_eur, L.battery_kwh,   L.battery_eur,   L.curtail_kwh,
          L.curtail_eur,   L.lost_kwh,      L.lost_eur,      L.total_eur};
}

}  // namespace vpp
