#include "vpp/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "csv.hpp"

namespace vpp {

ValidationError::ValidationError(std::vector<std::string> violations)
    : std::runtime_error([&] {
        std::string msg;
        for (std::size_t i = 0; i < violations.size(); ++i) msg += (i ? "; " : "") + violations[i];
        return msg;
      }()),
      violations_(std::move(violations)) {}

CoverageError::CoverageError(int missing_begin, int missing_end)
    : std::runtime_error("profile does not cover [" + std::to_string(missing_begin) + ", " +
                         std::to_string(missing_end) + ") min"),
      begin_(missing_begin),
      end_(missing_end) {}

std::vector<Minutes> default_control_points() {
  return {0, 5, 10, 15, 30, 60, 90, 120, 180, 240, 300, 360, 420, 480, 540, 600, 780, 900};
}

ScenarioConfig reference_scenario() {
  ScenarioConfig c;
  c.chp.name = "chp";
  c.chp.p_min = 6.0;
  c.chp.p_max = 20.0;
  c.chp.min_uptime = 20;
  c.chp.min_downtime = 15;
  c.chp.startup_time = 15;
  c.chp.kappa_gen = 0.10;
  c.chp.kappa_start = 0.30;
  c.res_p_max = 30.0;
  c.demand_p_max = 50.0;
  c.grid_p_max = 10.0;
  c.battery_capacity = 20.0;
  c.battery_p_max = 20.0;
  c.kappa_batt = 0.15;
  c.kappa_grid_draw = 0.30;
  c.kappa_grid_feedin = 0.03;
  c.kappa_res_curtail = 0.10;
  c.horizon = 900;
  c.control_points = default_control_points();
  c.dt_opt = 5;
  c.lost_load_penalty = 10.0;
  c.initial_soc = 0.5;
  return c;
}

namespace {

void check_nonneg(std::vector<std::string>& out, const std::string& field, double v) {
  if (!(v >= 0.0)) out.push_back(field + ": must be >= 0 (got " + csv::number(v) + ")");
}

void check_duration(std::vector<std::string>& out, const std::string& field, Minutes v, Minutes dt) {
  if (v < 0) {
    out.push_back(field + ": must be >= 0 min");
  } else if (dt > 0 && v % dt != 0) {
    out.push_back(field + ": " + std::to_string(v) + " min is not a multiple of dt_opt = " +
                  std::to_string(dt) + " min");
  }
}

std::vector<std::string> control_point_violations(const std::vector<Minutes>& cp, Minutes horizon,
                                                  Minutes dt) {
  std::vector<std::string> out;
  if (cp.size() < 2) {
    out.emplace_back("control_points: need at least two points");
    return out;
  }
  if (cp.front() != 0) out.emplace_back("control_points: first point must be 0");
  for (std::size_t i = 1; i < cp.size(); ++i) {
    if (cp[i] <= cp[i - 1]) {
      out.push_back("control_points: not strictly increasing at index " + std::to_string(i));
      break;
    }
  }
  if (cp.back() != horizon) {
    out.push_back("control_points: last point " + std::to_string(cp.back()) +
                  " must equal horizon " + std::to_string(horizon));
  }
  if (dt > 0) {
    for (Minutes p : cp) {
      if (p % dt != 0) {
        out.push_back("control_points: " + std::to_string(p) + " is not a multiple of dt_opt");
        break;
      }
    }
  }
  return out;
}

}  // namespace

std::vector<std::string> scenario_violations(const ScenarioConfig& c) {
  std::vector<std::string> out;
  if (c.dt_opt <= 0) out.emplace_back("dt_opt: must be > 0");
  const Minutes dt = c.dt_opt;

  const UnitParams& u = c.chp;
  if (u.name.empty()) out.emplace_back("chp.name: must not be empty");
  check_nonneg(out, "chp.p_min", u.p_min);
  check_nonneg(out, "chp.p_max", u.p_max);
  if (u.p_min > u.p_max) {
    out.push_back("chp.p_min: " + csv::number(u.p_min) + " exceeds chp.p_max " + csv::number(u.p_max));
  }
  if (!(u.ramp_up > 0.0)) out.emplace_back("chp.ramp_up: must be > 0 when finite");
  if (!(u.ramp_down > 0.0)) out.emplace_back("chp.ramp_down: must be > 0 when finite");
  check_duration(out, "chp.min_uptime", u.min_uptime, dt);
  check_duration(out, "chp.min_downtime", u.min_downtime, dt);
  check_duration(out, "chp.startup_time", u.startup_time, dt);
  check_nonneg(out, "chp.kappa_gen", u.kappa_gen);
  check_nonneg(out, "chp.kappa_start", u.kappa_start);

  check_nonneg(out, "res_p_max", c.res_p_max);
  check_nonneg(out, "demand_p_max", c.demand_p_max);
  check_nonneg(out, "grid_p_max", c.grid_p_max);
  check_nonneg(out, "battery_p_max", c.battery_p_max);
  if (c.battery_p_max > 0.0 && !(c.battery_capacity > 0.0)) {
    out.emplace_back("battery_capacity: must be > 0 when battery_p_max > 0");
  }
  check_nonneg(out, "battery_capacity", c.battery_capacity);
  check_nonneg(out, "kappa_batt", c.kappa_batt);
  check_nonneg(out, "kappa_grid_draw", c.kappa_grid_draw);
  check_nonneg(out, "kappa_grid_feedin", c.kappa_grid_feedin);
  check_nonneg(out, "kappa_res_curtail", c.kappa_res_curtail);
  check_nonneg(out, "lost_load_penalty", c.lost_load_penalty);
  if (!(c.initial_soc >= 0.0 && c.initial_soc <= 1.0)) {
    out.emplace_back("initial_soc: must lie in [0, 1]");
  }
  if (c.horizon <= 0) out.emplace_back("horizon: must be > 0");
  for (auto& v : control_point_violations(c.control_points, c.horizon, dt)) out.push_back(std::move(v));
  return out;
}

ScenarioConfig validate_scenario(ScenarioConfig raw) {
  auto violations = scenario_violations(raw);
  if (!violations.empty()) throw ValidationError(std::move(violations));
  return raw;
}

namespace {

using nlohmann::json;

double get_number(const json& j, const std::string& field, std::vector<std::string>& errs,
                  double fallback) {
  if (!j.is_number()) {
    errs.push_back(field + ": expected a number");
    return fallback;
  }
  return j.get<double>();
}

Minutes get_minutes(const json& j, const std::string& field, std::vector<std::string>& errs,
                    Minutes fallback) {
  const double v = get_number(j, field, errs, fallback);
  if (std::floor(v) != v) {
    errs.push_back(field + ": " + csv::number(v) + " min is not a whole number of minutes");
    return fallback;
  }
  return static_cast<Minutes>(v);
}

double get_ramp(const json& j, const std::string& field, std::vector<std::string>& errs) {
  if (j.is_null()) return kUnlimited;
  if (j.is_string() && j.get<std::string>() == "unlimited") return kUnlimited;
  return get_number(j, field, errs, kUnlimited);
}

}  // namespace

ScenarioConfig scenario_from_json(const nlohmann::json& doc) {
  ScenarioConfig c = reference_scenario();
  std::vector<std::string> errs;
  if (!doc.is_object()) throw ValidationError("scenario: top level must be an object");

  static const std::set<std::string> top_keys = {
      "chp", "res_p_max", "demand_p_max", "grid_p_max", "battery_capacity", "battery_p_max",
      "kappa_batt", "kappa_grid_draw", "kappa_grid_feedin", "kappa_res_curtail", "horizon",
      "control_points", "dt_opt", "lost_load_penalty", "initial_soc"};
  static const std::set<std::string> unit_keys = {
      "name", "p_min", "p_max", "ramp_up", "ramp_down", "min_uptime", "min_downtime",
      "startup_time", "kappa_gen", "kappa_start"};

  for (const auto& [key, value] : doc.items()) {
    if (!top_keys.contains(key)) errs.push_back(key + ": unknown key");
  }
  if (doc.contains("chp")) {
    const json& u = doc["chp"];
    if (!u.is_object()) {
      errs.emplace_back("chp: expected an object");
    } else {
      for (const auto& [key, value] : u.items()) {
        if (!unit_keys.contains(key)) errs.push_back("chp." + key + ": unknown key");
      }
      if (u.contains("name")) {
        if (u["name"].is_string()) {
          c.chp.name = u["name"].get<std::string>();
        } else {
          errs.emplace_back("chp.name: expected a string");
        }
      }
      auto num = [&](const char* k, double& dst) {
        if (u.contains(k)) dst = get_number(u[k], std::string("chp.") + k, errs, dst);
      };
      auto mins = [&](const char* k, Minutes& dst) {
        if (u.contains(k)) dst = get_minutes(u[k], std::string("chp.") + k, errs, dst);
      };
      num("p_min", c.chp.p_min);
      num("p_max", c.chp.p_max);
      if (u.contains("ramp_up")) c.chp.ramp_up = get_ramp(u["ramp_up"], "chp.ramp_up", errs);
      if (u.contains("ramp_down")) c.chp.ramp_down = get_ramp(u["ramp_down"], "chp.ramp_down", errs);
      mins("min_uptime", c.chp.min_uptime);
      mins("min_downtime", c.chp.min_downtime);
      mins("startup_time", c.chp.startup_time);
      num("kappa_gen", c.chp.kappa_gen);
      num("kappa_start", c.chp.kappa_start);
    }
  }
  auto num = [&](const char* k, double& dst) {
    if (doc.contains(k)) dst = get_number(doc[k], k, errs, dst);
  };
  auto mins = [&](const char* k, Minutes& dst) {
    if (doc.contains(k)) dst = get_minutes(doc[k], k, errs, dst);
  };
  num("res_p_max", c.res_p_max);
  num("demand_p_max", c.demand_p_max);
  num("grid_p_max", c.grid_p_max);
  num("battery_capacity", c.battery_capacity);
  num("battery_p_max", c.battery_p_max);
  num("kappa_batt", c.kappa_batt);
  num("kappa_grid_draw", c.kappa_grid_draw);
  num("kappa_grid_feedin", c.kappa_grid_feedin);
  num("kappa_res_curtail", c.kappa_res_curtail);
  num("lost_load_penalty", c.lost_load_penalty);
  num("initial_soc", c.initial_soc);
  mins("horizon", c.horizon);
  mins("dt_opt", c.dt_opt);
  if (doc.contains("control_points")) {
    const json& cp = doc["control_points"];
    if (!cp.is_array()) {
      errs.emplace_back("control_points: expected an array");
    } else {
      c.control_points.clear();
      for (std::size_t i = 0; i < cp.size(); ++i) {
        c.control_points.push_back(
            get_minutes(cp[i], "control_points[" + std::to_string(i) + "]", errs, 0));
      }
    }
  }
  for (auto& v : scenario_violations(c)) errs.push_back(std::move(v));
  if (!errs.empty()) throw ValidationError(std::move(errs));
  return c;
}

nlohmann::json scenario_to_json(const ScenarioConfig& c) {
  auto ramp = [](double r) -> nlohmann::json {
    if (std::isinf(r)) return "unlimited";
    return r;
  };
  return {
      {"chp",
       {{"name", c.chp.name},
        {"p_min", c.chp.p_min},
        {"p_max", c.chp.p_max},
        {"ramp_up", ramp(c.chp.ramp_up)},
        {"ramp_down", ramp(c.chp.ramp_down)},
        {"min_uptime", c.chp.min_uptime},
        {"min_downtime", c.chp.min_downtime},
        {"startup_time", c.chp.startup_time},
        {"kappa_gen", c.chp.kappa_gen},
        {"kappa_start", c.chp.kappa_start}}},
      {"res_p_max", c.res_p_max},
      {"demand_p_max", c.demand_p_max},
      {"grid_p_max", c.grid_p_max},
      {"battery_capacity", c.battery_capacity},
      {"battery_p_max", c.battery_p_max},
      {"kappa_batt", c.kappa_batt},
      {"kappa_grid_draw", c.kappa_grid_draw},
      {"kappa_grid_feedin", c.kappa_grid_feedin},
      {"kappa_res_curtail", c.kappa_res_curtail},
      {"horizon", c.horizon},
      {"control_points", c.control_points},
      {"dt_opt", c.dt_opt},
      {"lost_load_penalty", c.lost_load_penalty},
      {"initial_soc", c.initial_soc},
  };
}

ScenarioConfig load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError(path.string() + ": cannot open file");
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
  try {
    return scenario_from_json(doc);
  } catch (const ValidationError& e) {
    std::vector<std::string> v;
    for (const auto& s : e.violations()) v.push_back(path.string() + ": " + s);
    throw ValidationError(std::move(v));
  }
}

TimeGrid build_time_grid(const ScenarioConfig& config, Minutes now) {
  auto errs = control_point_violations(config.control_points, config.horizon, config.dt_opt);
  if (!errs.empty()) throw ValidationError(std::move(errs));
  TimeGrid g;
  g.points.reserve(config.control_points.size());
  for (Minutes p : config.control_points) g.points.push_back(now + p);
  g.steps.reserve(g.points.size() - 1);
  for (std::size_t i = 0; i + 1 < g.points.size(); ++i) g.steps.push_back(g.points[i + 1] - g.points[i]);
  return g;
}

std::size_t Profile::index_of(Minutes t) const {
  if (times.empty() || t < times.front() || t >= end() || (t - times.front()) % dt != 0) {
    throw CoverageError(t, t + dt);
  }
  return static_cast<std::size_t>((t - times.front()) / dt);
}

void validate_profile(const Profile& p, const ScenarioConfig& config) {
  std::vector<std::string> errs;
  if (p.demand.size() != p.times.size() || p.res_available.size() != p.times.size()) {
    throw ValidationError("profile: column lengths differ");
  }
  if (p.dt != config.dt_opt) errs.emplace_back("profile: spacing differs from dt_opt");
  for (std::size_t i = 1; i < p.times.size(); ++i) {
    if (p.times[i] - p.times[i - 1] != p.dt) {
      errs.push_back("profile: non-uniform spacing at t=" + std::to_string(p.times[i]));
      break;
    }
  }
  constexpr double slack = 1e-9;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p.demand[i] < 0.0 || p.demand[i] > config.demand_p_max + slack) {
      errs.push_back("profile: demand " + csv::number(p.demand[i]) + " kW at t=" +
                     std::to_string(p.times[i]) + " outside [0, demand_p_max]");
    }
    if (p.res_available[i] < 0.0 || p.res_available[i] > config.res_p_max + slack) {
      errs.push_back("profile: res " + csv::number(p.res_available[i]) + " kW at t=" +
                     std::to_string(p.times[i]) + " outside [0, res_p_max]");
    }
    if (errs.size() > 20) break;
  }
  if (!errs.empty()) throw ValidationError(std::move(errs));
}

Profile load_profile_csv(const std::filesystem::path& path, Minutes dt_opt) {
  const auto rows = csv::read_numeric(path, {"time_min", "demand_kw", "res_kw"});
  Profile p;
  p.dt = dt_opt;
  std::vector<std::string> errs;
  const std::string where = path.string() + ":";
  for (const auto& row : rows) {
    const double t = row.values[0];
    if (std::floor(t) != t) {
      errs.push_back(where + std::to_string(row.line) + ": time_min must be a whole number");
      continue;
    }
    const auto ti = static_cast<Minutes>(t);
    if (!p.times.empty() && ti - p.times.back() != dt_opt) {
      errs.push_back(where + std::to_string(row.line) + ": expected time " +
                     std::to_string(p.times.back() + dt_opt) + ", found " + std::to_string(ti));
    }
    if (row.values[1] < 0.0 || row.values[2] < 0.0) {
      errs.push_back(where + std::to_string(row.line) + ": negative power");
    }
    p.times.push_back(ti);
    p.demand.push_back(row.values[1]);
    p.res_available.push_back(row.values[2]);
  }
  if (p.times.empty()) errs.push_back(where + " no data rows");
  if (!errs.empty()) throw ValidationError(std::move(errs));
  return p;
}

void write_profile_csv(const std::filesystem::path& path, const Profile& p) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error(path.string() + ": cannot write");
  out << "time_min,demand_kw,res_kw\n";
  for (std::size_t i = 0; i < p.size(); ++i) {
    out << p.times[i] << ',' << csv::number(p.demand[i]) << ',' << csv::number(p.res_available[i])
        << '\n';
  }
}

std::vector<double> step_series_means(const std::vector<Minutes>& knots,
                                      const std::vector<double>& values, Minutes tail_end,
                                      const TimeGrid& grid) {
  if (knots.empty() || knots.size() != values.size()) throw CoverageError(grid.start(), grid.end());
  if (grid.start() < knots.front()) throw CoverageError(grid.start(), std::min(knots.front(), grid.end()));
  if (grid.end() > tail_end) throw CoverageError(std::max(tail_end, grid.start()), grid.end());

  std::vector<double> out(grid.segments(), 0.0);
  // index of the knot interval containing grid.start()
  auto it = std::upper_bound(knots.begin(), knots.end(), grid.start());
  std::size_t k = static_cast<std::size_t>(std::distance(knots.begin(), it)) - 1;
  for (std::size_t s = 0; s < grid.segments(); ++s) {
    const Minutes a = grid.points[s];
    const Minutes b = grid.points[s + 1];
    double energy = 0.0;  // kW*min
    Minutes t = a;
    while (t < b) {
      while (k + 1 < knots.size() && knots[k + 1] <= t) ++k;
      const Minutes next = k + 1 < knots.size() ? knots[k + 1] : tail_end;
      const Minutes stop = std::min(next, b);
      energy += values[k] * static_cast<double>(stop - t);
      t = stop;
    }
    out[s] = energy / static_cast<double>(b - a);
  }
  return out;
}

SegmentSeries resample_profile(const Profile& profile, const TimeGrid& grid) {
  SegmentSeries s;
  s.demand = step_series_means(profile.times, profile.demand, profile.end(), grid);
  s.res = step_series_means(profile.times, profile.res_available, profile.end(), grid);
  return s;
}

}  // namespace vpp
