#include "vpp/dispatch.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>
#include <string>

#include "csv.hpp"

namespace vpp {

using milp::Relation;
using milp::Term;

void validate_initial_state(const InitialState& init, const UnitParams& unit) {
  std::vector<std::string> errs;
  if (!(init.soc >= 0.0 && init.soc <= 1.0)) errs.emplace_back("initial state: soc outside [0, 1]");
  if (init.chp_time_in_state < 0) errs.emplace_back("initial state: chp_time_in_state < 0");
  if (init.chp_starting_remaining < 0) errs.emplace_back("initial state: chp_starting_remaining < 0");
  if (init.chp_on && init.chp_starting_remaining > 0) {
    errs.emplace_back("initial state: unit cannot be on and starting at once");
  }
  if (init.chp_starting_remaining > unit.startup_time) {
    errs.emplace_back("initial state: chp_starting_remaining exceeds startup_time");
  }
  if (!(init.prev_chp_power >= 0.0 && init.prev_chp_power <= unit.p_max + 1e-9)) {
    errs.emplace_back("initial state: prev_chp_power outside [0, p_max]");
  }
  if (!init.chp_on && init.prev_chp_power > 1e-9) {
    errs.emplace_back("initial state: prev_chp_power > 0 while the unit is not on");
  }
  if (!errs.empty()) throw ValidationError(std::move(errs));
}

namespace {

std::string indexed(const char* base, std::size_t t) {
  return std::string(base) + "[" + std::to_string(t) + "]";
}

}  // namespace

DispatchProblem build_dispatch_problem(const ScenarioConfig& sc,
                                       const std::vector<double>& demand_forecast,
                                       const std::vector<double>& res_forecast,
                                       const InitialState& init, const TimeGrid& grid,
                                       bool battery_enabled) {
  const std::size_t T = grid.segments();
  if (T == 0 || demand_forecast.size() != T || res_forecast.size() != T) {
    throw ValidationError("dispatch: forecast has " + std::to_string(demand_forecast.size()) + "/" +
                          std::to_string(res_forecast.size()) + " values for " + std::to_string(T) +
                          " grid segments");
  }
  validate_initial_state(init, sc.chp);
  if (battery_enabled && !(sc.battery_capacity > 0.0)) {
    throw ValidationError("dispatch: battery enabled with non-positive capacity");
  }

  DispatchProblem dp;
  dp.grid = grid;
  dp.demand = demand_forecast;
  dp.res = res_forecast;
  dp.init = init;
  dp.battery_enabled = battery_enabled;
  milp::LinearProblem& lp = dp.lp;
  DispatchLayout& L = dp.layout;
  const UnitParams& chp = sc.chp;
  const Minutes now = grid.start();

  const double batt_p = battery_enabled ? sc.battery_p_max : 0.0;
  for (std::size_t t = 0; t < T; ++t) {
    const double h = grid.step_hours(t);
    const double demand = std::max(0.0, demand_forecast[t]);
    const double res = std::max(0.0, res_forecast[t]);
    L.p_chp.push_back(lp.add_variable(indexed("p_chp", t), 0.0, chp.p_max, chp.kappa_gen * h));
    L.p_dis.push_back(lp.add_variable(indexed("p_dis", t), 0.0, batt_p, sc.kappa_batt * h));
    L.p_ch.push_back(lp.add_variable(indexed("p_ch", t), 0.0, batt_p, 0.0));
    L.p_curtail.push_back(lp.add_variable(indexed("p_curtail", t), 0.0, res, sc.kappa_res_curtail * h));
    L.p_draw.push_back(lp.add_variable(indexed("p_draw", t), 0.0, sc.grid_p_max, sc.kappa_grid_draw * h));
    L.p_feed.push_back(lp.add_variable(indexed("p_feed", t), 0.0, sc.grid_p_max, -sc.kappa_grid_feedin * h));
    L.p_lost.push_back(lp.add_variable(indexed("p_lost", t), 0.0, demand, sc.lost_load_penalty * h));
    const bool soc_fixed = t == 0 || !battery_enabled;
    L.soc.push_back(lp.add_variable(indexed("soc", t), soc_fixed ? init.soc : 0.0,
                                    soc_fixed ? init.soc : 1.0));
    L.u.push_back(lp.add_binary(indexed("u", t)));
    L.v.push_back(lp.add_binary(indexed("v", t), chp.kappa_start));
    L.w.push_back(lp.add_binary(indexed("w", t)));
  }
  L.soc.push_back(lp.add_variable(indexed("soc", T), battery_enabled ? 0.0 : init.soc,
                                  battery_enabled ? 1.0 : init.soc));

  // A start requested at segment k produces power from the first grid point
  // at least startup_time later.
  auto first_at_or_after = [&](Minutes when) {
    for (std::size_t t = 0; t < T; ++t) {
      if (grid.points[t] >= when) return t;
    }
    return DispatchLayout::none;
  };
  L.start_effect.resize(T);
  std::vector<std::vector<std::size_t>> starts_at(T);
  for (std::size_t k = 0; k < T; ++k) {
    L.start_effect[k] = first_at_or_after(grid.points[k] + chp.startup_time);
    if (L.start_effect[k] == DispatchLayout::none) {
      lp.upper[L.v[k]] = 0.0;
    } else {
      starts_at[L.start_effect[k]].push_back(L.v[k]);
    }
  }
  // Starts already in progress, and the pre-horizon commitment history.
  std::vector<double> pending(T, 0.0);
  if (init.chp_starting_remaining > 0) {
    const std::size_t e = first_at_or_after(now + init.chp_starting_remaining);
    if (e != DispatchLayout::none) pending[e] = 1.0;
  }
  const double u_prev = init.chp_on ? 1.0 : 0.0;
  const bool hist_start = init.chp_on;
  const bool hist_stop = !init.chp_on && init.chp_starting_remaining == 0;
  const Minutes hist_time = now - init.chp_time_in_state;

  for (std::size_t t = 0; t < T; ++t) {
    lp.add_row({{L.p_chp[t], 1.0},
                {L.p_dis[t], 1.0},
                {L.p_ch[t], -1.0},
                {L.p_curtail[t], -1.0},
                {L.p_draw[t], 1.0},
                {L.p_feed[t], -1.0},
                {L.p_lost[t], 1.0}},
               Relation::Equal, std::max(0.0, demand_forecast[t]) - std::max(0.0, res_forecast[t]),
               indexed("balance", t));

    std::vector<Term> soc_terms{{L.soc[t + 1], 1.0}, {L.soc[t], -1.0}};
    if (battery_enabled) {
      const double k = grid.step_hours(t) / sc.battery_capacity;
      soc_terms.push_back({L.p_dis[t], k});
      soc_terms.push_back({L.p_ch[t], -k});
    }
    lp.add_row(std::move(soc_terms), Relation::Equal, 0.0, indexed("soc", t));

    lp.add_row({{L.p_chp[t], 1.0}, {L.u[t], -chp.p_max}}, Relation::LessEqual, 0.0,
               indexed("chp_max", t));
    if (chp.p_min > 0.0) {
      lp.add_row({{L.p_chp[t], 1.0}, {L.u[t], -chp.p_min}}, Relation::GreaterEqual, 0.0,
                 indexed("chp_min", t));
    }

    const double steps = static_cast<double>(grid.steps[t]) / sc.dt_opt;
    if (std::isfinite(chp.ramp_up)) {
      if (t == 0) {
        lp.add_row({{L.p_chp[0], 1.0}}, Relation::LessEqual, init.prev_chp_power + chp.ramp_up * steps,
                   indexed("ramp_up", t));
      } else {
        lp.add_row({{L.p_chp[t], 1.0}, {L.p_chp[t - 1], -1.0}}, Relation::LessEqual,
                   chp.ramp_up * steps, indexed("ramp_up", t));
      }
    }
    if (std::isfinite(chp.ramp_down)) {
      if (t == 0) {
        lp.add_row({{L.p_chp[0], -1.0}}, Relation::LessEqual, chp.ramp_down * steps - init.prev_chp_power,
                   indexed("ramp_down", t));
      } else {
        lp.add_row({{L.p_chp[t - 1], 1.0}, {L.p_chp[t], -1.0}}, Relation::LessEqual,
                   chp.ramp_down * steps, indexed("ramp_down", t));
      }
    }

    // u_t - u_{t-1} = (starts effective at t) - w_t
    std::vector<Term> logic{{L.u[t], 1.0}, {L.w[t], 1.0}};
    if (t > 0) logic.push_back({L.u[t - 1], -1.0});
    for (std::size_t v : starts_at[t]) logic.push_back({v, -1.0});
    lp.add_row(std::move(logic), Relation::Equal, pending[t] + (t == 0 ? u_prev : 0.0),
               indexed("logic", t));

    if (chp.min_uptime > 0) {
      const Minutes window_open = grid.points[t] - chp.min_uptime;
      std::vector<Term> terms{{L.u[t], -1.0}};
      double fixed = 0.0;
      for (std::size_t i = 0; i <= t; ++i) {
        if (grid.points[i] <= window_open) continue;
        for (std::size_t v : starts_at[i]) terms.push_back({v, 1.0});
        fixed += pending[i];
      }
      if (hist_start && hist_time > window_open) fixed += 1.0;
      if (terms.size() > 1 || fixed > 0.0) {
        lp.add_row(std::move(terms), Relation::LessEqual, -fixed, indexed("min_up", t));
      }
    }
    if (chp.min_downtime > 0) {
      const Minutes window_open = grid.points[t] - chp.min_downtime;
      std::vector<Term> terms{{L.u[t], 1.0}};
      for (std::size_t i = 0; i <= t; ++i) {
        if (grid.points[i] > window_open) terms.push_back({L.w[i], 1.0});
      }
      const double fixed = hist_stop && hist_time > window_open ? 1.0 : 0.0;
      lp.add_row(std::move(terms), Relation::LessEqual, 1.0 - fixed, indexed("min_down", t));
    }
    if (chp.min_downtime < chp.startup_time) {
      // No start request while the unit is running.
      lp.add_row({{L.v[t], 1.0}, {L.u[t], 1.0}}, Relation::LessEqual, 1.0, indexed("request_off", t));
    }
  }
  return dp;
}

DispatchSchedule extract_dispatch(const DispatchProblem& dp, const milp::Solution& sol) {
  if (!sol.optimal()) {
    throw std::invalid_argument(std::string("extract_dispatch: solution status is ") +
                                milp::to_string(sol.status));
  }
  if (sol.values.size() != dp.lp.n_vars()) {
    throw std::invalid_argument("extract_dispatch: solution does not match problem");
  }
  const DispatchLayout& L = dp.layout;
  const std::size_t T = dp.grid.segments();
  const auto& x = sol.values;
  DispatchSchedule s;
  s.grid = dp.grid;
  s.objective = sol.objective;
  for (std::size_t t = 0; t < T; ++t) {
    const double dis = x[L.p_dis[t]];
    const double ch = x[L.p_ch[t]];
    const double curtail = x[L.p_curtail[t]];
    const double lost = x[L.p_lost[t]];
    s.p_chp.push_back(x[L.p_chp[t]]);
    s.p_discharge.push_back(dis);
    s.p_charge.push_back(ch);
    s.p_batt.push_back(dis - ch);
    s.p_curtail.push_back(curtail);
    s.p_res_used.push_back(std::max(0.0, dp.res[t]) - curtail);
    s.p_grid_draw.push_back(x[L.p_draw[t]]);
    s.p_grid_feed.push_back(x[L.p_feed[t]]);
    s.p_lost.push_back(lost);
    s.served_demand.push_back(std::max(0.0, dp.demand[t]) - lost);
    s.u.push_back(static_cast<int>(std::lround(x[L.u[t]])));
    s.v.push_back(static_cast<int>(std::lround(x[L.v[t]])));
    s.w.push_back(static_cast<int>(std::lround(x[L.w[t]])));
  }
  for (std::size_t t = 0; t <= T; ++t) s.soc.push_back(x[L.soc[t]]);
  return s;
}

bool operator==(const Command& a, const Command& b) {
  return a.p_chp == b.p_chp && a.p_batt == b.p_batt && a.p_res_used == b.p_res_used &&
         a.p_curtail == b.p_curtail && a.p_grid == b.p_grid && a.p_lost == b.p_lost &&
         a.start_chp == b.start_chp && a.stop_chp == b.stop_chp;
}

Command first_step_command(const DispatchSchedule& s) {
  if (s.segments() == 0) throw std::invalid_argument("first_step_command: empty schedule");
  Command c;
  c.p_chp = s.p_chp[0];
  c.p_batt = s.p_batt[0];
  c.p_res_used = s.p_res_used[0];
  c.p_curtail = s.p_curtail[0];
  c.p_grid = s.p_grid_draw[0] - s.p_grid_feed[0];
  c.p_lost = s.p_lost[0];
  c.start_chp = s.v[0] == 1;
  c.stop_chp = s.w[0] == 1;
  return c;
}

double first_step_cost(const DispatchSchedule& s, const ScenarioConfig& sc) {
  if (s.segments() == 0) throw std::invalid_argument("first_step_cost: empty schedule");
  const double h = sc.dt_opt / 60.0;
  return h * (sc.kappa_grid_draw * s.p_grid_draw[0] - sc.kappa_grid_feedin * s.p_grid_feed[0] +
              sc.chp.kappa_gen * s.p_chp[0] + sc.kappa_batt * s.p_discharge[0] +
              sc.kappa_res_curtail * s.p_curtail[0] + sc.lost_load_penalty * s.p_lost[0]) +
         sc.chp.kappa_start * s.v[0];
}

void write_schedule_csv(std::ostream& out, const DispatchSchedule& s) {
  out << "t_min,dt_min,p_chp_kw,p_batt_kw,p_res_kw,p_curtail_kw,p_grid_kw,soc,u,v,w\n";
  for (std::size_t t = 0; t < s.segments(); ++t) {
    out << s.grid.points[t] << ',' << s.grid.steps[t] << ',' << csv::number(s.p_chp[t]) << ','
        << csv::number(s.p_batt[t]) << ',' << csv::number(s.p_res_used[t]) << ','
        << csv::number(s.p_curtail[t]) << ',' << csv::number(s.p_grid_draw[t] - s.p_grid_feed[t])
        << ',' << csv::number(s.soc[t]) << ',' << s.u[t] << ',' << s.v[t] << ',' << s.w[t] << '\n';
  }
}

}  // namespace vpp
