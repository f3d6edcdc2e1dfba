#include "vpp/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <boost/math/distributions/students_t.hpp>
#include <cmath>
#include <exception>
#include <fstream>
#include <iomanip>
#include <map>
#include <mutex>
#include <nlohmann/json.hpp>
#include <set>
#include <sstream>
#include <thread>
#include <tuple>

#include "csv.hpp"
#include "vpp/errors.hpp"

namespace vpp {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void reject_unknown(const json& obj, std::initializer_list<const char*> known, const std::string& where,
                    std::vector<std::string>& errs) {
  for (const auto& [key, value] : obj.items()) {
    if (std::find_if(known.begin(), known.end(), [&](const char* k) { return key == k; }) == known.end()) {
      errs.push_back(where + ": unknown key '" + key + "'");
    }
  }
}

ForecastPolicy policy_from_json(const json& p, const fs::path& base, std::vector<std::string>& errs) {
  const std::string where = "matrix.policies";
  if (!p.is_object() || !p.contains("kind") || !p["kind"].is_string()) {
    errs.push_back(where + ": each policy needs a string 'kind'");
    return PerfectForecast{};
  }
  const std::string kind = p["kind"];
  auto rmse = [&]() {
    if (!p.contains("target_rmse") || !p["target_rmse"].is_number()) {
      errs.push_back(where + ": '" + kind + "' needs numeric target_rmse");
      return 0.0;
    }
    const double s = p["target_rmse"];
    if (!(s >= 0.0)) errs.push_back(where + ": target_rmse must be >= 0");
    return s;
  };
  if (kind == "perfect") {
    reject_unknown(p, {"kind"}, where, errs);
    return PerfectForecast{};
  }
  if (kind == "synthetic") {
    reject_unknown(p, {"kind", "target_rmse"}, where, errs);
    return SyntheticForecast{rmse()};
  }
  if (kind == "worst_case") {
    reject_unknown(p, {"kind", "target_rmse", "margin_scale"}, where, errs);
    WorstCaseForecast wc{rmse(), 1.0};
    if (p.contains("margin_scale")) {
      if (!p["margin_scale"].is_number() || !(p["margin_scale"].get<double>() >= 0.0)) {
        errs.push_back(where + ": margin_scale must be a number >= 0");
      } else {
        wc.margin_scale = p["margin_scale"];
      }
    }
    return wc;
  }
  if (kind == "external") {
    reject_unknown(p, {"kind", "file"}, where, errs);
    if (!p.contains("file") || !p["file"].is_string()) {
      errs.push_back(where + ": 'external' needs a string file");
      return PerfectForecast{};
    }
    fs::path f = p["file"].get<std::string>();
    if (f.is_relative()) f = base / f;
    try {
      return ExternalForecast{std::make_shared<const ExternalForecastTable>(load_external_forecasts(f))};
    } catch (const ValidationError& e) {
      for (const auto& v : e.violations()) errs.push_back(v);
      return PerfectForecast{};
    }
  }
  errs.push_back(where + ": unknown kind '" + kind + "' (perfect, synthetic, worst_case, external)");
  return PerfectForecast{};
}

bool deterministic(const ForecastPolicy& p) { return !policy_is_random(p); }

std::string fixed(double v, int digits) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(digits) << v;
  return os.str();
}

std::string percent(double ratio) {
  std::ostringstream os;
  os << std::showpos << std::fixed << std::setprecision(1) << (ratio - 1.0) * 100.0 << '%';
  return os.str();
}

}  // namespace

ExperimentMatrix matrix_from_json(const json& doc, const fs::path& base) {
  std::vector<std::string> errs;
  ExperimentMatrix m;
  if (!doc.is_object()) throw ValidationError("matrix: document must be an object");
  reject_unknown(doc, {"days", "policies", "battery", "seeds", "normalize", "duration_min", "error_model"},
                 "matrix", errs);

  if (!doc.contains("days") || !doc["days"].is_array() || doc["days"].empty()) {
    errs.emplace_back("matrix.days: non-empty list of profile files required");
  } else {
    for (const auto& d : doc["days"]) {
      if (!d.is_string()) {
        errs.emplace_back("matrix.days: entries must be file paths");
        continue;
      }
      fs::path p = d.get<std::string>();
      if (p.is_relative()) p = base / p;
      m.days.push_back({p.stem().string(), p});
    }
  }
  if (!doc.contains("policies") || !doc["policies"].is_array() || doc["policies"].empty()) {
    errs.emplace_back("matrix.policies: non-empty list required");
  } else {
    for (const auto& p : doc["policies"]) m.policies.push_back(policy_from_json(p, base, errs));
  }
  if (doc.contains("battery")) {
    const auto& b = doc["battery"];
    if (b.is_boolean()) {
      m.battery_options = {b.get<bool>()};
    } else if (b.is_array() && !b.empty() && std::all_of(b.begin(), b.end(), [](const json& x) { return x.is_boolean(); })) {
      for (const auto& x : b) m.battery_options.push_back(x.get<bool>());
    } else {
      errs.emplace_back("matrix.battery: boolean or non-empty list of booleans");
    }
  } else {
    m.battery_options = {false, true};
  }
  if (doc.contains("seeds")) {
    const auto& s = doc["seeds"];
    const auto non_negative = [](const json& x) { return x.is_number_integer() && x.get<std::int64_t>() >= 0; };
    if (non_negative(s) && s.get<std::int64_t>() > 0) {
      for (std::uint64_t i = 1; i <= s.get<std::uint64_t>(); ++i) m.seeds.push_back(i);
    } else if (s.is_array() && !s.empty() && std::all_of(s.begin(), s.end(), non_negative)) {
      for (const auto& x : s) m.seeds.push_back(x.get<std::uint64_t>());
    } else {
      errs.emplace_back("matrix.seeds: positive count or non-empty list of non-negative integers");
    }
  } else {
    m.seeds = {1};
  }
  if (doc.contains("normalize")) {
    if (doc["normalize"].is_boolean()) {
      m.normalize = doc["normalize"];
    } else {
      errs.emplace_back("matrix.normalize: boolean required");
    }
  }
  if (doc.contains("duration_min")) {
    if (doc["duration_min"].is_number_integer() && doc["duration_min"].get<int>() > 0) {
      m.duration = doc["duration_min"];
    } else {
      errs.emplace_back("matrix.duration_min: positive integer required");
    }
  }
  if (doc.contains("error_model")) {
    const auto& e = doc["error_model"];
    reject_unknown(e, {"a", "b", "c"}, "matrix.error_model", errs);
    for (const char* k : {"a", "b", "c"}) {
      if (!e.contains(k) || !e[k].is_number() || !(e[k].get<double>() > 0.0)) {
        errs.push_back(std::string("matrix.error_model.") + k + ": positive number required");
      }
    }
    if (errs.empty()) m.error_model = ErrorModel{e["a"], e["b"], e["c"], 1.0};
  }

  std::set<std::string> labels;
  for (const auto& p : m.policies) {
    if (!labels.insert(policy_label(p)).second) errs.push_back("matrix.policies: duplicate policy " + policy_label(p));
  }
  std::set<std::string> names;
  for (const auto& d : m.days) {
    if (!names.insert(d.name).second) errs.push_back("matrix.days: duplicate day name " + d.name);
  }
  if (m.normalize && errs.empty()) {
    const bool has_perfect = std::any_of(m.policies.begin(), m.policies.end(), [](const ForecastPolicy& p) {
      return std::holds_alternative<PerfectForecast>(p);
    });
    const bool has_plain =
        std::find(m.battery_options.begin(), m.battery_options.end(), false) != m.battery_options.end();
    if (!has_perfect || !has_plain) {
      errs.emplace_back("matrix: normalization needs the base case (perfect policy without battery)");
    }
  }
  if (!errs.empty()) throw ValidationError(std::move(errs));
  return m;
}

ExperimentMatrix load_matrix(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError(path.string() + ": cannot open matrix file");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
  try {
    return matrix_from_json(doc, path.parent_path());
  } catch (const ValidationError& e) {
    std::vector<std::string> v;
    for (const auto& x : e.violations()) v.push_back(path.string() + ": " + x);
    throw ValidationError(std::move(v));
  }
}

std::string RunKey::id() const {
  return day + "/" + policy + "/" + (battery ? "battery" : "no_battery") + "/seed" + std::to_string(seed);
}

std::vector<RunKey> expand_matrix(const ExperimentMatrix& m, std::uint64_t base_seed) {
  std::vector<RunKey> keys;
  for (const auto& d : m.days) {
    for (const auto& p : m.policies) {
      for (bool b : m.battery_options) {
        for (std::uint64_t s : m.seeds) {
          keys.push_back({d.name, policy_label(p), policy_rmse(p), b, base_seed + s});
        }
      }
    }
  }
  return keys;
}

std::vector<RunRecord> run_matrix(const ScenarioConfig& sc, const ExperimentMatrix& m,
                                  const MatrixOptions& opt) {
  std::vector<Profile> profiles;
  for (const auto& d : m.days) {
    Profile p = load_profile_csv(d.path, sc.dt_opt);
    validate_profile(p, sc);
    profiles.push_back(std::move(p));
  }

  struct Job {
    std::size_t day, policy;
    bool battery;
    std::uint64_t seed;
  };
  std::vector<Job> jobs;
  std::vector<std::size_t> job_of;  // per expanded key
  std::map<std::tuple<std::size_t, std::size_t, bool, std::uint64_t>, std::size_t> index;
  for (std::size_t d = 0; d < m.days.size(); ++d) {
    for (std::size_t p = 0; p < m.policies.size(); ++p) {
      for (bool b : m.battery_options) {
        for (std::uint64_t s : m.seeds) {
          const std::uint64_t seed = deterministic(m.policies[p]) ? 0 : opt.base_seed + s;
          auto [it, fresh] = index.try_emplace({d, p, b, seed}, jobs.size());
          if (fresh) jobs.push_back({d, p, b, seed});
          job_of.push_back(it->second);
        }
      }
    }
  }

  std::vector<RunResult> results(jobs.size());
  std::atomic<std::size_t> next{0};
  std::mutex collector;
  std::size_t done = 0;
  std::exception_ptr failure;
  auto worker = [&]() {
    for (;;) {
      const std::size_t j = next.fetch_add(1);
      if (j >= jobs.size()) return;
      {
        std::lock_guard lock(collector);
        if (failure) return;
      }
      try {
        RunSpec spec;
        spec.policy = m.policies[jobs[j].policy];
        spec.battery_enabled = jobs[j].battery;
        spec.seed = jobs[j].seed;
        spec.error_model = m.error_model;
        spec.solver = opt.solver;
        spec.duration = m.duration;
        results[j] = simulate_day(sc, profiles[jobs[j].day], spec);
        std::lock_guard lock(collector);
        ++done;
        if (opt.progress) {
          RunRecord r;
          r.key = {m.days[jobs[j].day].name, policy_label(spec.policy), policy_rmse(spec.policy),
                   spec.battery_enabled, spec.seed};
          r.ledger = results[j].ledger;
          r.solver = results[j].solver;
          r.violations = results[j].violations.size();
          r.wall_ms = results[j].wall_ms;
          opt.progress(r, done, jobs.size());
        }
      } catch (...) {
        std::lock_guard lock(collector);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const int n_threads = std::max(1, std::min<int>(opt.jobs, static_cast<int>(jobs.size())));
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int i = 0; i < n_threads; ++i) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);

  const std::vector<RunKey> keys = expand_matrix(m, opt.base_seed);
  std::vector<RunRecord> out;
  out.reserve(keys.size());
  for (std::size_t i = 0; i < keys.size(); ++i) {
    const RunResult& r = results[job_of[i]];
    out.push_back({keys[i], r.ledger, r.solver, r.violations.size(), r.wall_ms});
  }
  return out;
}

CellStats cell_stats(const std::vector<double>& v, double level) {
  CellStats s;
  s.n = v.size();
  if (v.empty()) return s;
  double sum = 0.0;
  for (double x : v) sum += x;
  s.mean = sum / static_cast<double>(s.n);
  if (s.n < 2) return s;
  double sq = 0.0;
  for (double x : v) sq += (x - s.mean) * (x - s.mean);
  const double sd = std::sqrt(sq / static_cast<double>(s.n - 1));
  const boost::math::students_t dist(static_cast<double>(s.n - 1));
  const double t = boost::math::quantile(boost::math::complement(dist, (1.0 - level) / 2.0));
  s.half_width = t * sd / std::sqrt(static_cast<double>(s.n));
  return s;
}

namespace {

const std::vector<std::string>& key_columns() {
  static const std::vector<std::string> cols{"run_id", "day", "policy", "target_rmse", "battery", "seed"};
  return cols;
}
const std::vector<std::string>& solver_columns() {
  static const std::vector<std::string> cols{"solves", "solver_failures", "nodes", "iterations",
                                             "max_residual", "violations"};
  return cols;
}

using CellKey = std::tuple<std::string, std::string, bool>;  // day, policy, battery

struct Cell {
  std::string day, policy;
  double rmse = 0.0;
  bool battery = false;
  std::vector<const RunRecord*> runs;
};

// Cells keep first-appearance order of the run list; "all" aggregates the
// per-seed mean across days.
std::vector<Cell> group_cells(const std::vector<RunRecord>& runs, bool with_all) {
  std::vector<Cell> cells;
  std::map<CellKey, std::size_t> pos;
  auto add = [&](const std::string& day, const RunRecord& r) {
    auto [it, fresh] = pos.try_emplace({day, r.key.policy, r.key.battery}, cells.size());
    if (fresh) cells.push_back({day, r.key.policy, r.key.target_rmse, r.key.battery, {}});
    cells[it->second].runs.push_back(&r);
  };
  for (const RunRecord& r : runs) add(r.key.day, r);
  if (with_all) {
    for (const RunRecord& r : runs) add("all", r);
  }
  return cells;
}

// Values per seed; for "all" cells each seed's value is the mean across days.
std::vector<double> seed_values(const Cell& c, const std::function<double(const RunRecord&)>& f) {
  std::map<std::uint64_t, std::pair<double, int>> acc;
  for (const RunRecord* r : c.runs) {
    auto& [s, n] = acc[r->key.seed];
    s += f(*r);
    ++n;
  }
  std::vector<double> v;
  for (const auto& [seed, sn] : acc) v.push_back(sn.first / sn.second);
  return v;
}

std::string battery_text(bool b) { return b ? "yes" : "no"; }

struct Summary {
  std::vector<Cell> cells;
  std::map<CellKey, CellStats> stats;
  std::map<std::string, double> base;  // per day
};

Summary summarize(const std::vector<RunRecord>& runs) {
  Summary s;
  s.cells = group_cells(runs, true);
  for (const Cell& c : s.cells) {
    const CellStats st = cell_stats(seed_values(c, [](const RunRecord& r) { return r.ledger.total_eur; }));
    s.stats[{c.day, c.policy, c.battery}] = st;
    if (c.policy == "perfect" && !c.battery) s.base[c.day] = st.mean;
  }
  return s;
}

std::optional<double> base_of(const Summary& s, const std::string& day) {
  auto it = s.base.find(day);
  if (it == s.base.end() || it->second == 0.0) return std::nullopt;
  return it->second;
}

}  // namespace

void write_run_outputs(const fs::path& dir, const ExperimentMatrix& matrix, const std::vector<RunKey>& expected,
                       const std::vector<RunRecord>& runs) {
  fs::create_directories(dir);
  {
    std::ofstream out(dir / "ledgers.csv");
    bool first = true;
    for (const auto& cols : {key_columns(), ledger_columns(), solver_columns()}) {
      for (const auto& c : cols) {
        out << (first ? "" : ",") << c;
        first = false;
      }
    }
    out << '\n';
    for (const RunRecord& r : runs) {
      out << r.key.id() << ',' << r.key.day << ',' << r.key.policy << ',' << csv::number(r.key.target_rmse)
          << ',' << (r.key.battery ? 1 : 0) << ',' << r.key.seed;
      for (double v : ledger_values(r.ledger)) out << ',' << csv::number(v);
      out << ',' << r.solver.solves << ',' << r.solver.failures << ',' << r.solver.nodes << ','
          << r.solver.iterations << ',' << csv::number(r.solver.max_residual) << ',' << r.violations << '\n';
    }
  }
  {
    std::ofstream out(dir / "timing.csv");
    out << "run_id,wall_ms,solver_total_ms,median_solve_ms,max_solve_ms\n";
    for (const RunRecord& r : runs) {
      out << r.key.id() << ',' << fixed(r.wall_ms, 3) << ',' << fixed(r.solver.total_ms, 3) << ','
          << fixed(r.solver.median_ms, 3) << ',' << fixed(r.solver.max_ms, 3) << '\n';
    }
  }

  const Summary s = summarize(runs);
  {
    std::ofstream out(dir / "normalized_costs.csv");
    out << "day,policy,target_rmse,battery,n,mean_total_eur,ci95_half_width_eur,normalized_mean,"
           "normalized_ci95_half_width\n";
    for (const Cell& c : s.cells) {
      const CellStats& st = s.stats.at({c.day, c.policy, c.battery});
      const double base = matrix.normalize ? base_of(s, c.day).value_or(0.0) : 0.0;
      out << c.day << ',' << c.policy << ',' << csv::number(c.rmse) << ',' << (c.battery ? 1 : 0) << ','
          << st.n << ',' << csv::number(st.mean) << ',' << (st.half_width ? csv::number(*st.half_width) : "")
          << ',' << (base ? csv::number(st.mean / base) : "") << ','
          << (base && st.half_width ? csv::number(*st.half_width / base) : "") << '\n';
    }
  }
  {
    std::ofstream out(dir / "device_breakdown.csv");
    out << "day,policy,target_rmse,battery,grid_draw_eur,grid_feed_eur,chp_eur,chp_start_eur,battery_eur,"
           "curtail_eur,lost_eur,total_eur,grid_draw_kwh,chp_kwh\n";
    for (const Cell& c : s.cells) {
      auto mean = [&](double CostLedger::*field) {
        return cell_stats(seed_values(c, [field](const RunRecord& r) { return r.ledger.*field; })).mean;
      };
      out << c.day << ',' << c.policy << ',' << csv::number(c.rmse) << ',' << (c.battery ? 1 : 0);
      for (auto f : {&CostLedger::grid_draw_eur, &CostLedger::grid_feed_eur, &CostLedger::chp_eur,
                     &CostLedger::chp_start_eur, &CostLedger::battery_eur, &CostLedger::curtail_eur,
                     &CostLedger::lost_eur, &CostLedger::total_eur, &CostLedger::grid_draw_kwh,
                     &CostLedger::chp_kwh}) {
        out << ',' << csv::number(mean(f));
      }
      out << '\n';
    }
  }
  {
    json manifest;
    manifest["normalize"] = matrix.normalize;
    manifest["runs"] = json::array();
    for (const RunKey& k : expected) manifest["runs"].push_back(k.id());
    std::ofstream out(dir / "manifest.json");
    out << manifest.dump(2) << '\n';
  }
}

std::vector<RunRecord> read_ledgers_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError(path.string() + ": cannot open");
  std::string line;
  if (!std::getline(in, line)) throw ValidationError(path.string() + ":1: missing header");
  const std::vector<std::string> header = csv::split(line);
  std::map<std::string, std::size_t> col;
  for (std::size_t i = 0; i < header.size(); ++i) col[csv::trim(header[i])] = i;
  std::vector<std::string> needed = key_columns();
  needed.insert(needed.end(), ledger_columns().begin(), ledger_columns().end());
  needed.insert(needed.end(), solver_columns().begin(), solver_columns().end());
  for (const auto& n : needed) {
    if (!col.count(n)) throw ValidationError(path.string() + ":1: missing column " + n);
  }
  std::vector<RunRecord> out;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (csv::trim(line).empty()) continue;
    const auto cells = csv::split(line);
    if (cells.size() != header.size()) {
      throw ValidationError(path.string() + ":" + std::to_string(lineno) + ": expected " +
                            std::to_string(header.size()) + " fields");
    }
    auto num = [&](const std::string& name) {
      const std::string& c = cells[col[name]];
      try {
        std::size_t used = 0;
        const double v = std::stod(c, &used);
        if (used != c.size()) throw std::invalid_argument(c);
        return v;
      } catch (const std::exception&) {
        throw ValidationError(path.string() + ":" + std::to_string(lineno) + ": bad number in " + name);
      }
    };
    RunRecord r;
    r.key.day = cells[col["day"]];
    r.key.policy = cells[col["policy"]];
    r.key.target_rmse = num("target_rmse");
    r.key.battery = num("battery") != 0.0;
    r.key.seed = static_cast<std::uint64_t>(num("seed"));
    const auto& lc = ledger_columns();
    std::vector<double> lv;
    for (const auto& c : lc) lv.push_back(num(c));
    CostLedger& L = r.ledger;
    double* fields[] = {&L.grid_draw_kwh, &L.grid_draw_eur, &L.grid_feed_kwh, &L.grid_feed_eur,
                        &L.chp_kwh,       &L.chp_eur,       nullptr,          &L.chp_start_eur,
                        &L.battery_kwh,   &L.battery_eur,   &L.curtail_kwh,   &L.curtail_eur,
                        &L.lost_kwh,      &L.lost_eur,      &L.total_eur};
    for (std::size_t i = 0; i < lv.size(); ++i) {
      if (fields[i]) *fields[i] = lv[i];
    }
    L.chp_starts = static_cast<int>(lv[6]);
    r.solver.solves = static_cast<int>(num("solves"));
    r.solver.failures = static_cast<int>(num("solver_failures"));
    r.solver.nodes = static_cast<std::int64_t>(num("nodes"));
    r.solver.iterations = static_cast<std::int64_t>(num("iterations"));
    r.solver.max_residual = num("max_residual");
    r.violations = static_cast<std::size_t>(num("violations"));
    out.push_back(std::move(r));
  }
  return out;
}

ReportResult make_report(const fs::path& dir) {
  ReportResult rep;
  std::ifstream mf(dir / "manifest.json");
  if (!mf) throw ValidationError((dir / "manifest.json").string() + ": cannot open (run the matrix first)");
  json manifest;
  try {
    manifest = json::parse(mf);
  } catch (const json::parse_error& e) {
    throw ValidationError((dir / "manifest.json").string() + ": " + e.what());
  }
  const std::vector<RunRecord> runs = read_ledgers_csv(dir / "ledgers.csv");
  std::set<std::string> present;
  for (const auto& r : runs) present.insert(r.key.id());
  std::size_t expected = 0;
  for (const auto& id : manifest.value("runs", json::array())) {
    ++expected;
    if (!present.count(id.get<std::string>())) rep.missing_runs.push_back(id);
  }
  const bool normalize = manifest.value("normalize", true);

  const Summary s = summarize(runs);
  std::ostringstream os;
  os << "vpplab report: " << dir.string() << '\n';
  os << "runs present: " << runs.size() << " of " << expected << '\n';
  if (!rep.missing_runs.empty()) {
    os << "missing runs:\n";
    for (const auto& id : rep.missing_runs) os << "  " << id << '\n';
  }
  os << '\n'
     << std::left << std::setw(12) << "day" << std::setw(22) << "policy" << std::setw(9) << "battery"
     << std::right << std::setw(4) << "n" << std::setw(12) << "mean EUR" << std::setw(12) << "95% CI +/-"
     << std::setw(12) << "normalized" << std::setw(12) << "norm CI" << '\n';
  std::ofstream plot(dir / "cost_vs_error.csv");
  plot << "battery,policy,target_rmse,n,mean_total_eur,ci95_half_width_eur,normalized_mean,"
          "normalized_ci95_half_width\n";
  for (const Cell& c : s.cells) {
    const CellStats& st = s.stats.at({c.day, c.policy, c.battery});
    const double base = normalize ? base_of(s, c.day).value_or(0.0) : 0.0;
    os << std::left << std::setw(12) << c.day << std::setw(22) << c.policy << std::setw(9)
       << battery_text(c.battery) << std::right << std::setw(4) << st.n << std::setw(12) << fixed(st.mean, 3)
       << std::setw(12) << (st.half_width ? fixed(*st.half_width, 3) : "undefined") << std::setw(12)
       << (base ? fixed(st.mean / base, 4) : "n/a") << std::setw(12)
       << (base && st.half_width ? fixed(*st.half_width / base, 4) : "undefined") << '\n';
    if (c.day == "all") {
      plot << (c.battery ? 1 : 0) << ',' << c.policy << ',' << csv::number(c.rmse) << ',' << st.n << ','
           << csv::number(st.mean) << ',' << (st.half_width ? csv::number(*st.half_width) : "") << ','
           << (base ? csv::number(st.mean / base) : "") << ','
           << (base && st.half_width ? csv::number(*st.half_width / base) : "") << '\n';
    }
  }

  // Change against the perfect forecast with the same battery option.
  auto delta = [&](const std::string& policy, bool battery) -> std::string {
    auto it = s.stats.find({"all", policy, battery});
    auto ref = s.stats.find({"all", "perfect", battery});
    if (it == s.stats.end() || ref == s.stats.end() || ref->second.mean == 0.0) return "n/a";
    return percent(it->second.mean / ref->second.mean);
  };
  std::string external = "n/a";
  for (const Cell& c : s.cells) {
    if (c.day == "all" && c.policy.rfind("external_", 0) == 0 && !c.battery) {
      external = delta(c.policy, false);
      break;
    }
  }
  os << "\ncost change against perfect forecast, mean over days\n";
  os << std::left << std::setw(28) << "case" << std::setw(12) << "measured"
     << "paper reference — not an assertion target\n";
  const std::tuple<const char*, std::string, const char*> rows[] = {
      {"no battery, eps=0.1", delta("synthetic_0.1", false), "+8%"},
      {"no battery, eps=0.2", delta("synthetic_0.2", false), "+25%"},
      {"battery, eps=0.1", delta("synthetic_0.1", true), "+2%"},
      {"battery, eps=0.2", delta("synthetic_0.2", true), "+30%"},
      {"real forecasts", external, "≈+5%"},
  };
  for (const auto& [name, measured, reference] : rows) {
    os << std::left << std::setw(28) << name << std::setw(12) << measured << reference << '\n';
  }
  rep.summary = os.str();
  std::ofstream(dir / "summary.txt") << rep.summary;
  return rep;
}

}  // namespace vpp
