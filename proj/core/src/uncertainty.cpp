#include "vpp/uncertainty.hpp"

#include <Eigen/Dense>
#include <boost/math/tools/minima.hpp>
#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>

#include "csv.hpp"
#include "vpp/errors.hpp"

namespace vpp {

double eval_error_model(const ErrorModel& m, double lead) {
  if (!(lead >= 0.0)) throw ValidationError("error model: negative lead time " + csv::number(lead));
  if (lead == 0.0) return 0.0;
  return lead / (m.a + m.b * std::pow(lead, m.c));
}

std::vector<double> segment_leads(const TimeGrid& grid) {
  std::vector<double> leads;
  leads.reserve(grid.segments());
  for (std::size_t t = 0; t < grid.segments(); ++t) {
    leads.push_back(static_cast<double>(grid.points[t] - grid.start()) + 0.5 * grid.steps[t]);
  }
  return leads;
}

double calibrate_norm(const ErrorModel& model, const std::vector<double>& leads) {
  if (leads.empty()) throw ValidationError("error model: no lead times to calibrate on");
  double sq = 0.0;
  for (double l : leads) {
    const double e = eval_error_model(model, l);
    sq += e * e;
  }
  const double rms = std::sqrt(sq / static_cast<double>(leads.size()));
  if (!(rms > 0.0)) throw ValidationError("error model: eps is zero on every lead");
  return rms;
}

namespace {

double sse_of(const std::vector<RmseSample>& s, double a, double b, double c) {
  double sse = 0.0;
  for (const RmseSample& x : s) {
    const double r = x.relative_rmse - x.lead_min / (a + b * std::pow(x.lead_min, c));
    sse += r * r;
  }
  return sse;
}

bool usable(double a, double b, double c) {
  return std::isfinite(a) && std::isfinite(b) && std::isfinite(c) && a > 0.0 && b > 0.0 && c > 0.0;
}

struct Profiled {
  double a = 0.0, b = 0.0;
  double sse = std::numeric_limits<double>::infinity();
};

// Best (a, b) for fixed c: reciprocal linear solve, then reweighted
// iterations of y (a + b t^c) - t = 0 with weights 1 / (a + b t^c).
Profiled profile_ab(const std::vector<RmseSample>& all, const std::vector<RmseSample>& pos, double c) {
  Profiled out;
  Eigen::MatrixXd X(pos.size(), 2);
  Eigen::VectorXd z(pos.size());
  for (std::size_t i = 0; i < pos.size(); ++i) {
    X(i, 0) = 1.0 / pos[i].lead_min;
    X(i, 1) = std::pow(pos[i].lead_min, c - 1.0);
    z(i) = 1.0 / pos[i].relative_rmse;
  }
  Eigen::Vector2d ab = X.colPivHouseholderQr().solve(z);
  if (!usable(ab(0), ab(1), c)) return out;
  out = {ab(0), ab(1), sse_of(all, ab(0), ab(1), c)};

  Eigen::MatrixXd W(all.size(), 2);
  Eigen::VectorXd rhs(all.size());
  for (int it = 0; it < 30; ++it) {
    for (std::size_t i = 0; i < all.size(); ++i) {
      const double t = all[i].lead_min, y = all[i].relative_rmse;
      const double tc = std::pow(t, c);
      const double w = 1.0 / (ab(0) + ab(1) * tc);
      W(i, 0) = w * y;
      W(i, 1) = w * y * tc;
      rhs(i) = w * t;
    }
    ab = W.colPivHouseholderQr().solve(rhs);
    if (!usable(ab(0), ab(1), c)) break;
    const double sse = sse_of(all, ab(0), ab(1), c);
    if (!(sse < out.sse)) break;
    const bool done = out.sse - sse <= 1e-14 * out.sse;
    out = {ab(0), ab(1), sse};
    if (done) break;
  }
  return out;
}

}  // namespace

FitResult fit_error_model(const std::vector<RmseSample>& samples) {
  std::vector<std::string> errs;
  if (samples.size() < 3) errs.push_back("fit: need at least 3 samples, got " + std::to_string(samples.size()));
  std::set<double> leads;
  bool any_positive = false;
  for (const RmseSample& s : samples) {
    if (!(s.lead_min > 0.0) || !std::isfinite(s.lead_min)) {
      errs.push_back("fit: lead times must be positive, got " + csv::number(s.lead_min));
    } else if (!leads.insert(s.lead_min).second) {
      errs.push_back("fit: duplicate lead time " + csv::number(s.lead_min));
    }
    if (!(s.relative_rmse >= 0.0) || !std::isfinite(s.relative_rmse)) {
      errs.push_back("fit: relative_rmse must be finite and >= 0");
    }
    if (s.relative_rmse > 0.0) any_positive = true;
  }
  if (errs.empty() && !any_positive) errs.emplace_back("fit: degenerate samples, every eps is 0");
  if (!errs.empty()) throw ValidationError(std::move(errs));

  std::vector<RmseSample> pos;
  for (const RmseSample& s : samples) {
    if (s.relative_rmse > 0.0) pos.push_back(s);
  }
  if (pos.size() < 2) throw ValidationError("fit: need at least 2 samples with eps > 0");

  constexpr int kGrid = 200;
  constexpr double kCmin = 0.1, kCmax = 3.0;
  auto c_at = [&](int k) { return kCmin * std::pow(kCmax / kCmin, static_cast<double>(k) / (kGrid - 1)); };
  double best_sse = std::numeric_limits<double>::infinity();
  double ba = 0, bb = 0, bc = 0;
  int best_k = -1;
  for (int k = 0; k < kGrid; ++k) {
    const Profiled pr = profile_ab(samples, pos, c_at(k));
    if (pr.sse < best_sse) {
      best_sse = pr.sse;
      ba = pr.a;
      bb = pr.b;
      bc = c_at(k);
      best_k = k;
    }
  }
  if (!std::isfinite(best_sse)) {
    throw ValidationError("fit: every candidate yields a <= 0 or b <= 0; samples do not follow t/(a + b t^c)");
  }
  const auto [c_ref, sse_ref] = boost::math::tools::brent_find_minima(
      [&](double c) { return profile_ab(samples, pos, c).sse; }, c_at(std::max(best_k - 1, 0)),
      c_at(std::min(best_k + 1, kGrid - 1)), std::numeric_limits<double>::digits / 2);
  if (sse_ref < best_sse) {
    const Profiled pr = profile_ab(samples, pos, c_ref);
    best_sse = pr.sse;
    ba = pr.a;
    bb = pr.b;
    bc = c_ref;
  }

  // Levenberg-damped Gauss-Newton on the original residuals.
  Eigen::Vector3d p(ba, bb, bc);
  double lambda = 1e-3;
  const std::size_t n = samples.size();
  Eigen::MatrixXd J(n, 3);
  Eigen::VectorXd r(n);
  for (int it = 0; it < 200; ++it) {
    for (std::size_t i = 0; i < n; ++i) {
      const double t = samples[i].lead_min;
      const double tc = std::pow(t, p(2));
      const double d = p(0) + p(1) * tc;
      r(i) = samples[i].relative_rmse - t / d;
      const double g = t / (d * d);
      J(i, 0) = -g;
      J(i, 1) = -g * tc;
      J(i, 2) = -g * p(1) * tc * std::log(t);
    }
    const Eigen::Matrix3d JtJ = J.transpose() * J;
    const Eigen::Vector3d Jtr = J.transpose() * r;
    bool improved = false;
    while (lambda < 1e12) {
      Eigen::Matrix3d A = JtJ;
      for (int k = 0; k < 3; ++k) A(k, k) += lambda * std::max(JtJ(k, k), 1e-300);
      const Eigen::Vector3d step = A.ldlt().solve(Jtr);
      const Eigen::Vector3d q = p - step;
      if (usable(q(0), q(1), q(2))) {
        const double sse = sse_of(samples, q(0), q(1), q(2));
        if (sse < best_sse) {
          const double gain = best_sse - sse;
          p = q;
          best_sse = sse;
          lambda = std::max(lambda * 0.1, 1e-12);
          improved = gain > 1e-15 * std::max(best_sse, 1e-300);
          break;
        }
      }
      lambda *= 10.0;
    }
    if (!improved) break;
  }

  FitResult out;
  out.model.a = p(0);
  out.model.b = p(1);
  out.model.c = p(2);
  out.sse = best_sse;
  out.rms_residual = std::sqrt(best_sse / static_cast<double>(n));
  return out;
}

std::vector<RmseSample> load_rmse_samples(const std::filesystem::path& path) {
  std::vector<RmseSample> out;
  for (const csv::NumericRow& row : csv::read_numeric(path, {"lead_min", "relative_rmse"})) {
    out.push_back({row.values[0], row.values[1]});
  }
  return out;
}

std::mt19937_64 forecast_rng(std::uint64_t run_seed, std::uint64_t step, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(run_seed), static_cast<std::uint32_t>(run_seed >> 32),
                    static_cast<std::uint32_t>(step), static_cast<std::uint32_t>(step >> 32),
                    static_cast<std::uint32_t>(stream)};
  return std::mt19937_64(seq);
}

std::vector<double> draw_forecast_errors(const std::vector<double>& leads, double unit_p_max,
                                         const ErrorModel& model, double s, std::mt19937_64& rng) {
  if (!(s >= 0.0)) throw ValidationError("forecast: target_rmse must be >= 0");
  if (!(model.norm > 0.0)) throw ValidationError("forecast: error model norm must be > 0");
  std::vector<double> e(leads.size(), 0.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (std::size_t t = 0; t < leads.size(); ++t) {
    const double sigma = s * unit_p_max * eval_error_model(model, leads[t]) / model.norm;
    e[t] = sigma * normal(rng);
  }
  return e;
}

std::vector<double> synthesize_forecast(const std::vector<double>& truth,
                                        const std::vector<double>& leads, double unit_p_max,
                                        const ErrorModel& model, double s, std::mt19937_64& rng) {
  if (truth.size() != leads.size()) throw ValidationError("forecast: truth and leads differ in length");
  if (s == 0.0) return truth;
  const std::vector<double> e = draw_forecast_errors(leads, unit_p_max, model, s, rng);
  std::vector<double> out(truth.size());
  for (std::size_t t = 0; t < truth.size(); ++t) out[t] = std::clamp(truth[t] + e[t], 0.0, unit_p_max);
  return out;
}

Envelope worst_case_envelope(const std::vector<double>& demand, const std::vector<double>& res,
                             const std::vector<double>& leads, const ErrorModel& model, double s,
                             const ScenarioConfig& sc) {
  if (!(s >= 0.0)) throw ValidationError("envelope: margin must be >= 0");
  if (demand.size() != leads.size() || res.size() != leads.size()) {
    throw ValidationError("envelope: forecasts and leads differ in length");
  }
  Envelope env{demand, res};
  if (s == 0.0) return env;
  for (std::size_t t = 0; t < leads.size(); ++t) {
    const double k = s * eval_error_model(model, leads[t]) / model.norm;
    env.demand[t] = std::clamp(demand[t] + k * sc.demand_p_max, 0.0, sc.demand_p_max);
    env.res[t] = std::clamp(res[t] - k * sc.res_p_max, 0.0, sc.res_p_max);
  }
  return env;
}

ExternalForecastTable load_external_forecasts(const std::filesystem::path& path) {
  ExternalForecastTable table;
  table.source = path.string();
  const auto rows = csv::read_numeric(path, {"issue_min", "lead_min", "demand_kw", "res_kw"});
  auto where = [&](std::size_t line) { return path.string() + ":" + std::to_string(line) + ": "; };
  for (const csv::NumericRow& row : rows) {
    const double issue = row.values[0], lead = row.values[1];
    if (issue != std::floor(issue) || lead != std::floor(lead)) {
      throw ValidationError(where(row.line) + "issue_min and lead_min must be whole minutes");
    }
    if (lead < 0.0) throw ValidationError(where(row.line) + "negative lead_min");
    if (row.values[2] < 0.0 || row.values[3] < 0.0) {
      throw ValidationError(where(row.line) + "negative power");
    }
    auto& block = table.blocks[static_cast<Minutes>(issue)];
    const auto l = static_cast<Minutes>(lead);
    if (block.leads.empty() ? l != 0 : l <= block.leads.back()) {
      throw ValidationError(where(row.line) +
                            "leads must start at 0 and increase strictly within an issue block");
    }
    block.leads.push_back(l);
    block.demand.push_back(row.values[2]);
    block.res.push_back(row.values[3]);
  }
  if (table.blocks.empty()) throw ValidationError(path.string() + ": no forecast rows");
  for (const auto& [issue, block] : table.blocks) {
    if (block.leads.size() < 2) {
      throw ValidationError(path.string() + ": issue " + std::to_string(issue) +
                            " needs at least two lead rows");
    }
  }
  return table;
}

SegmentSeries external_forecast(const ExternalForecastTable& table, const TimeGrid& grid) {
  auto it = table.blocks.upper_bound(grid.start());
  if (it == table.blocks.begin()) throw CoverageError(grid.start(), grid.end());
  --it;
  const Minutes issue = it->first;
  const auto& b = it->second;
  std::vector<Minutes> knots;
  for (Minutes l : b.leads) knots.push_back(issue + l);
  const Minutes tail = knots.back() + (knots.back() - knots[knots.size() - 2]);
  SegmentSeries s;
  s.demand = step_series_means(knots, b.demand, tail, grid);
  s.res = step_series_means(knots, b.res, tail, grid);
  return s;
}

namespace {

std::string rmse_text(double s) {
  std::ostringstream os;
  os << s;
  return os.str();
}

}  // namespace

std::string policy_label(const ForecastPolicy& policy) {
  struct {
    std::string operator()(const PerfectForecast&) const { return "perfect"; }
    std::string operator()(const SyntheticForecast& p) const { return "synthetic_" + rmse_text(p.target_rmse); }
    std::string operator()(const ExternalForecast& p) const {
      return "external_" + (p.table ? std::filesystem::path(p.table->source).stem().string() : "none");
    }
    std::string operator()(const WorstCaseForecast& p) const {
      std::string s = "worst_case_" + rmse_text(p.target_rmse);
      if (p.margin_scale != 1.0) s += "_x" + rmse_text(p.margin_scale);
      return s;
    }
  } visitor;
  return std::visit(visitor, policy);
}

double policy_rmse(const ForecastPolicy& policy) {
  if (const auto* s = std::get_if<SyntheticForecast>(&policy)) return s->target_rmse;
  if (const auto* w = std::get_if<WorstCaseForecast>(&policy)) return w->target_rmse;
  return 0.0;
}

bool policy_is_random(const ForecastPolicy& policy) {
  const auto* s = std::get_if<SyntheticForecast>(&policy);
  return s && s->target_rmse > 0.0;
}

}  // namespace vpp
