#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "vpp/model.hpp"
#include "vpp/sim.hpp"
#include "vpp/uncertainty.hpp"

namespace vpp {

struct DayInput {
  std::string name;  // file stem
  std::filesystem::path path;
};

struct ExperimentMatrix {
  std::vector<ForecastPolicy> policies;
  std::vector<bool> battery_options;
  std::vector<std::uint64_t> seeds;
  std::vector<DayInput> days;
  bool normalize = true;  // relative to Perfect without battery
  ErrorModel error_model;
  Minutes duration = 24 * 60;
};

/// Parses a matrix document. Relative day and forecast paths resolve against
/// `base_dir`. Seeds may be a list or a count n (meaning 1..n).
ExperimentMatrix matrix_from_json(const nlohmann::json& doc, const std::filesystem::path& base_dir);
ExperimentMatrix load_matrix(const std::filesystem::path& path);

struct RunKey {
  std::string day;
  std::string policy;
  double target_rmse = 0.0;
  bool battery = false;
  std::uint64_t seed = 0;

  std::string id() const;
};

struct RunRecord {
  RunKey key;
  CostLedger ledger;
  SolverSummary solver;
  std::size_t violations = 0;
  double wall_ms = 0.0;
};

struct MatrixOptions {
  int jobs = 1;
  std::uint64_t base_seed = 0;  // added to every matrix seed
  milp::SolverOptions solver;
  /// Called from the collector thread after each finished run.
  std::function<void(const RunRecord&, std::size_t done, std::size_t total)> progress;
};

/// Every matrix cell in a fixed order (day, policy, battery, seed).
std::vector<RunKey> expand_matrix(const ExperimentMatrix& matrix, std::uint64_t base_seed = 0);

/// Runs every cell on a pool of `jobs` workers. Deterministic policies run
/// once per (day, policy, battery) and are reused across seeds. Results come
/// back in expand_matrix order.
std::vector<RunRecord> run_matrix(const ScenarioConfig& scenario, const ExperimentMatrix& matrix,
                                  const MatrixOptions& options);

/// Student-t confidence interval over seed means.
struct CellStats {
  std::size_t n = 0;
  double mean = 0.0;
  std::optional<double> half_width;  // undefined for n < 2
};
CellStats cell_stats(const std::vector<double>& values, double level = 0.95);

/// Writes ledgers.csv, normalized_costs.csv, device_breakdown.csv and
/// manifest.json into `out_dir`.
void write_run_outputs(const std::filesystem::path& out_dir, const ExperimentMatrix& matrix,
                       const std::vector<RunKey>& expected, const std::vector<RunRecord>& runs);

std::vector<RunRecord> read_ledgers_csv(const std::filesystem::path& path);

struct ReportResult {
  std::string summary;
  std::vector<std::string> missing_runs;
};

/// Reads the outputs of a matrix run, writes summary.txt and
/// cost_vs_error.csv, and returns the summary text.
ReportResult make_report(const std::filesystem::path& out_dir);

}  // namespace vpp
