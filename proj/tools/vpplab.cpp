// vpplab: batch front end for the dispatch lab.

#include <CLI11.hpp>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <nlohmann/json.hpp>

#include "vpp/dispatch.hpp"
#include "vpp/errors.hpp"
#include "vpp/experiment.hpp"
#include "vpp/milp.hpp"
#include "vpp/model.hpp"
#include "vpp/sim.hpp"
#include "vpp/uncertainty.hpp"

namespace fs = std::filesystem;
using namespace vpp;

namespace {

constexpr int kExitValidation = 1;
constexpr int kExitSolver = 2;

struct Globals {
  std::uint64_t seed = 0;
  bool verbose = false;
};

ScenarioConfig scenario_or_reference(const std::string& path) {
  return path.empty() ? reference_scenario() : load_scenario(path);
}

int cmd_run(const Globals& g, const std::string& config, const std::string& matrix_path,
            const std::string& out, int jobs, double max_failure_rate, std::int64_t max_nodes) {
  const ScenarioConfig sc = load_scenario(config);
  const ExperimentMatrix matrix = load_matrix(matrix_path);
  MatrixOptions opt;
  opt.jobs = jobs;
  opt.base_seed = g.seed;
  if (max_nodes > 0) opt.solver.max_nodes = max_nodes;
  if (g.verbose) {
    opt.progress = [](const RunRecord& r, std::size_t done, std::size_t total) {
      std::cerr << "[" << done << "/" << total << "] " << r.key.id() << "  total " << std::fixed
                << std::setprecision(3) << r.ledger.total_eur << " EUR  median solve "
                << r.solver.median_ms << " ms\n";
    };
  }
  const std::vector<RunRecord> runs = run_matrix(sc, matrix, opt);
  write_run_outputs(out, matrix, expand_matrix(matrix, g.seed), runs);

  long solves = 0, failures = 0;
  for (const RunRecord& r : runs) {
    solves += r.solver.solves;
    failures += r.solver.failures;
  }
  std::cout << "wrote " << runs.size() << " runs to " << out << " (" << solves << " solves, " << failures
            << " solver failures)\n";
  if (solves > 0 && static_cast<double>(failures) / static_cast<double>(solves) > max_failure_rate) {
    std::cerr << "error: solver failure rate exceeds " << max_failure_rate << '\n';
    return kExitSolver;
  }
  return 0;
}

int cmd_fit(const std::string& samples_path, const std::string& out, std::string curve) {
  const std::vector<RmseSample> samples = load_rmse_samples(samples_path);
  const FitResult fit = fit_error_model(samples);
  if (curve.empty()) {
    const fs::path o(out);
    curve = (o.parent_path() / (o.stem().string() + "_curve.csv")).string();
  }
  constexpr int kMaxLead = 900;
  bool monotone = true;
  int argmax = 0;
  double prev = 0.0, best = 0.0;
  {
    std::ofstream c(curve);
    if (!c) throw ValidationError(curve + ": cannot write");
    c << "lead_min,epsilon\n";
    for (int t = 0; t <= kMaxLead; ++t) {
      const double e = eval_error_model(fit.model, t);
      if (e < prev) monotone = false;
      if (e > best) {
        best = e;
        argmax = t;
      }
      prev = e;
      c << t << ',' << std::setprecision(17) << e << '\n';
    }
  }
  nlohmann::json doc{{"a", fit.model.a},
                     {"b", fit.model.b},
                     {"c", fit.model.c},
                     {"rms_residual", fit.rms_residual},
                     {"samples", samples.size()},
                     {"monotone_0_900", monotone},
                     {"argmax_lead_min", argmax},
                     {"curve", curve}};
  std::ofstream o(out);
  if (!o) throw ValidationError(out + ": cannot write");
  o << doc.dump(2) << '\n';
  std::cout << std::setprecision(6) << "fit of eps(t) = t / (a + b t^c) on " << samples.size() << " samples\n"
            << "  a = " << fit.model.a << "\n  b = " << fit.model.b << "\n  c = " << fit.model.c
            << "\n  rms residual = " << fit.rms_residual << "\n  nondecreasing on [0, 900] min: "
            << (monotone ? "yes" : "no") << " (argmax " << argmax << " min)\n"
            << "wrote " << out << " and " << curve << '\n';
  return 0;
}

int cmd_report(const std::string& out) {
  const ReportResult rep = make_report(out);
  std::cout << rep.summary;
  if (!rep.missing_runs.empty()) {
    std::cerr << "error: " << rep.missing_runs.size() << " runs missing from ledgers.csv\n";
    return kExitValidation;
  }
  return 0;
}

int cmd_plan(const std::string& config, const std::string& profile_path, int at, bool battery,
             const std::string& schedule_out, const std::string& lp_out) {
  const ScenarioConfig sc = scenario_or_reference(config);
  const Profile profile = load_profile_csv(profile_path, sc.dt_opt);
  validate_profile(profile, sc);
  const TimeGrid grid = build_time_grid(sc, at);
  const SegmentSeries truth = resample_profile(profile, grid);
  InitialState init;
  init.soc = sc.initial_soc;
  init.chp_time_in_state = 24 * 60;
  const DispatchProblem dp = build_dispatch_problem(sc, truth.demand, truth.res, init, grid, battery);
  if (!lp_out.empty()) {
    std::ofstream o(lp_out);
    milp::write_problem(o, dp.lp);
  }
  const milp::Solution sol = milp::solve_milp(dp.lp);
  std::cout << "status " << milp::to_string(sol.status) << ", " << dp.lp.n_vars() << " vars ("
            << dp.lp.n_binaries() << " binary), " << dp.lp.rows.size() << " rows, " << sol.stats.nodes
            << " nodes, " << std::fixed << std::setprecision(2) << sol.stats.wall_ms << " ms\n";
  if (!sol.optimal()) return kExitSolver;
  std::cout << "objective " << std::setprecision(6) << sol.objective << " EUR\n";
  const DispatchSchedule s = extract_dispatch(dp, sol);
  if (schedule_out.empty()) {
    write_schedule_csv(std::cout, s);
  } else {
    std::ofstream o(schedule_out);
    write_schedule_csv(o, s);
  }
  return 0;
}

ForecastPolicy parse_policy(const std::string& kind, double rmse, double margin_scale,
                            const std::string& forecast_file) {
  if (kind == "perfect") return PerfectForecast{};
  if (kind == "synthetic") return SyntheticForecast{rmse};
  if (kind == "worst_case") return WorstCaseForecast{rmse, margin_scale};
  if (kind == "external") {
    if (forecast_file.empty()) throw ValidationError("--policy external needs --forecast <file>");
    return ExternalForecast{std::make_shared<const ExternalForecastTable>(load_external_forecasts(forecast_file))};
  }
  throw ValidationError("unknown policy '" + kind + "'");
}

int cmd_simulate(const Globals& g, const std::string& config, const std::string& profile_path,
                 const ForecastPolicy& policy, bool battery, int duration, const std::string& trajectory_out) {
  const ScenarioConfig sc = scenario_or_reference(config);
  const Profile profile = load_profile_csv(profile_path, sc.dt_opt);
  validate_profile(profile, sc);
  RunSpec spec;
  spec.policy = policy;
  spec.battery_enabled = battery;
  spec.seed = g.seed;
  spec.duration = duration;
  const RunResult r = simulate_day(sc, profile, spec);
  if (!trajectory_out.empty()) {
    std::ofstream o(trajectory_out);
    write_trajectory_csv(o, r.trajectory);
  }
  const auto& cols = ledger_columns();
  const auto vals = ledger_values(r.ledger);
  std::cout << policy_label(policy) << (battery ? " with battery" : " without battery") << ", "
            << r.trajectory.size() << " steps\n";
  for (std::size_t i = 0; i < cols.size(); ++i) {
    std::cout << "  " << std::left << std::setw(16) << cols[i] << std::right << std::fixed << std::setprecision(4)
              << vals[i] << '\n';
  }
  std::cout << "  solves " << r.solver.solves << ", failures " << r.solver.failures << ", median "
            << std::setprecision(2) << r.solver.median_ms << " ms, wall " << r.wall_ms / 1000.0 << " s\n";
  if (g.verbose) {
    for (const auto& v : r.violations) std::cerr << "  " << v << '\n';
  } else if (!r.violations.empty()) {
    std::cout << "  " << r.violations.size() << " logged violations (--verbose to list)\n";
  }
  return r.solver.failures > 0 ? kExitSolver : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"vpplab: VPP dispatch lab (MILP unit commitment, MPC simulation, forecast errors)"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--seed", g.seed, "Base seed added to every run seed");
  app.add_flag("-v,--verbose", g.verbose, "Progress and diagnostics on stderr");

  std::string config, matrix, out, samples, curve, profile, schedule_out, lp_out, trajectory_out, forecast;
  std::string policy_kind = "perfect";
  int jobs = 1, at = 0, duration = 24 * 60;
  double max_failure_rate = 0.0, rmse = 0.0, margin_scale = 1.0;
  std::int64_t max_nodes = 0;
  bool no_battery = false;

  auto* run = app.add_subcommand("run", "Run an experiment matrix");
  run->add_option("--config", config, "Scenario file")->required()->check(CLI::ExistingFile);
  run->add_option("--matrix", matrix, "Experiment matrix file")->required()->check(CLI::ExistingFile);
  run->add_option("--out", out, "Output directory")->required();
  run->add_option("--jobs", jobs, "Worker threads")->check(CLI::PositiveNumber);
  run->add_option("--max-failure-rate", max_failure_rate, "Tolerated fraction of failed solves")
      ->check(CLI::Range(0.0, 1.0));
  run->add_option("--max-nodes", max_nodes, "Branch-and-bound node limit per solve")->check(CLI::PositiveNumber);

  auto* fit = app.add_subcommand("fit", "Fit the lead-time error model");
  fit->add_option("--samples", samples, "CSV lead_min,relative_rmse")->required()->check(CLI::ExistingFile);
  fit->add_option("--out", out, "Model file (JSON)")->required();
  fit->add_option("--curve", curve, "Dense curve table (default <out>_curve.csv)");

  auto* report = app.add_subcommand("report", "Summarize a finished matrix run");
  report->add_option("--out", out, "Directory written by run")->required()->check(CLI::ExistingDirectory);

  auto* plan = app.add_subcommand("plan", "Solve one dispatch problem and print the schedule");
  plan->add_option("--config", config, "Scenario file (default: reference scenario)")->check(CLI::ExistingFile);
  plan->add_option("--profile", profile, "Profile CSV")->required()->check(CLI::ExistingFile);
  plan->add_option("--at", at, "Planning time (min)");
  plan->add_flag("--no-battery", no_battery, "Disable the battery");
  plan->add_option("--schedule", schedule_out, "Schedule CSV (default stdout)");
  plan->add_option("--lp", lp_out, "Write the MILP in plain-text form");

  auto* sim = app.add_subcommand("simulate", "Simulate one day and write its trajectory");
  sim->add_option("--config", config, "Scenario file (default: reference scenario)")->check(CLI::ExistingFile);
  sim->add_option("--profile", profile, "Profile CSV")->required()->check(CLI::ExistingFile);
  sim->add_option("--policy", policy_kind, "perfect | synthetic | worst_case | external")
      ->check(CLI::IsMember({"perfect", "synthetic", "worst_case", "external"}));
  sim->add_option("--rmse", rmse, "Target RMSE for synthetic and worst_case")->check(CLI::NonNegativeNumber);
  sim->add_option("--margin-scale", margin_scale, "Worst-case margin scale")->check(CLI::NonNegativeNumber);
  sim->add_option("--forecast", forecast, "External forecast CSV")->check(CLI::ExistingFile);
  sim->add_flag("--no-battery", no_battery, "Disable the battery");
  sim->add_option("--duration", duration, "Simulated minutes")->check(CLI::PositiveNumber);
  sim->add_option("--trajectory", trajectory_out, "Trajectory CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : kExitValidation;
  }

  try {
    if (*run) return cmd_run(g, config, matrix, out, jobs, max_failure_rate, max_nodes);
    if (*fit) return cmd_fit(samples, out, curve);
    if (*report) return cmd_report(out);
    if (*plan) return cmd_plan(config, profile, at, !no_battery, schedule_out, lp_out);
    if (*sim) {
      return cmd_simulate(g, config, profile, parse_policy(policy_kind, rmse, margin_scale, forecast), !no_battery,
                          duration, trajectory_out);
    }
  } catch (const ValidationError& e) {
    for (const auto& v : e.violations()) std::cerr << "error: " << v << '\n';
    return kExitValidation;
  } catch (const CoverageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  }
  return 0;
}
