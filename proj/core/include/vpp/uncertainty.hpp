#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <random>
#include <string>
#include <variant>
#include <vector>

#include "vpp/model.hpp"

namespace vpp {

/// Lead-time error growth eps(t) = t / (a + b t^c), t in minutes.
/// `norm` rescales eps so that its RMS over the operative horizon is 1.
struct ErrorModel {
  double a = 50.0;
  double b = 4.0;
  double c = 1.0;
  double norm = 1.0;
};

/// Throws ValidationError for negative leads.
double eval_error_model(const ErrorModel& model, double lead_min);

/// Lead time of each grid segment, measured from the grid start to the
/// segment midpoint (minutes).
std::vector<double> segment_leads(const TimeGrid& grid);

/// RMS of eps over `leads`; the value to store in ErrorModel::norm.
double calibrate_norm(const ErrorModel& model, const std::vector<double>& leads);

struct RmseSample {
  double lead_min = 0.0;
  double relative_rmse = 0.0;
};

struct FitResult {
  ErrorModel model;  // norm left at 1
  double sse = 0.0;
  double rms_residual = 0.0;
};

/// Least-squares fit of eps(t). Scans c over a geometric grid, solves the
/// reciprocal form 1/eps = a/t + b t^(c-1) linearly for each c, then polishes
/// the best candidate with Gauss-Newton on the original residuals.
/// Throws ValidationError on degenerate samples or when no candidate has
/// a > 0 and b > 0.
FitResult fit_error_model(const std::vector<RmseSample>& samples);

/// `lead_min,relative_rmse`
std::vector<RmseSample> load_rmse_samples(const std::filesystem::path& path);

/// Seeded generator for one forecast draw: the run seed, the MPC step and a
/// stream id (0 demand, 1 RES) are mixed through std::seed_seq.
std::mt19937_64 forecast_rng(std::uint64_t run_seed, std::uint64_t step, std::uint64_t stream);

/// Pre-clamp additive errors e_t ~ N(0, sigma_t),
/// sigma_t = s * unit_p_max * eps(lead_t) / norm.
std::vector<double> draw_forecast_errors(const std::vector<double>& leads, double unit_p_max,
                                         const ErrorModel& model, double target_rmse,
                                         std::mt19937_64& rng);

/// clamp(truth + e, 0, unit_p_max). s = 0 returns `truth` unchanged.
std::vector<double> synthesize_forecast(const std::vector<double>& truth,
                                        const std::vector<double>& leads, double unit_p_max,
                                        const ErrorModel& model, double target_rmse,
                                        std::mt19937_64& rng);

struct Envelope {
  std::vector<double> demand;
  std::vector<double> res;
};

/// Demand inflated and RES deflated by margin * P_max * eps(lead)/norm,
/// clamped to the physical ranges of the scenario.
Envelope worst_case_envelope(const std::vector<double>& demand_forecast,
                             const std::vector<double>& res_forecast,
                             const std::vector<double>& leads, const ErrorModel& model,
                             double margin, const ScenarioConfig& scenario);

/// Forecast blocks keyed by issue time (minutes since simulation start).
struct ExternalForecastTable {
  struct Block {
    std::vector<Minutes> leads;
    std::vector<double> demand;
    std::vector<double> res;
  };
  std::map<Minutes, Block> blocks;
  std::string source;
};

/// `issue_min,lead_min,demand_kw,res_kw`. Leads must be strictly increasing
/// within a block and start at 0.
ExternalForecastTable load_external_forecasts(const std::filesystem::path& path);

/// Segment means of the latest block issued at or before `grid.start()`.
/// Throws CoverageError when no block covers the grid.
SegmentSeries external_forecast(const ExternalForecastTable& table, const TimeGrid& grid);

struct PerfectForecast {};
struct SyntheticForecast {
  double target_rmse = 0.0;
};
struct ExternalForecast {
  std::shared_ptr<const ExternalForecastTable> table;
};
/// Worst-case envelope around the true profile with margin
/// target_rmse * margin_scale. Deterministic.
struct WorstCaseForecast {
  double target_rmse = 0.0;
  double margin_scale = 1.0;
};

using ForecastPolicy =
    std::variant<PerfectForecast, SyntheticForecast, ExternalForecast, WorstCaseForecast>;

/// Short identifier, e.g. "perfect", "synthetic_0.1", "worst_case_0.1".
std::string policy_label(const ForecastPolicy& policy);
/// Target RMSE of the policy (0 for Perfect and External).
double policy_rmse(const ForecastPolicy& policy);
/// True when the policy draws random numbers.
bool policy_is_random(const ForecastPolicy& policy);

}  // namespace vpp
