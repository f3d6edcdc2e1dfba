#include "simplex.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace vpp::milp::detail {
namespace {

constexpr double kPivotTol = 1e-9;
constexpr double kSingularTol = 1e-11;
constexpr double kTieTol = 1e-12;
constexpr int kRefactorInterval = 100;
constexpr int kDegenerateLimit = 50;

// Scale factors are powers of two so scaling is exact in floating point.
double pow2_scale(double magnitude) {
  if (!(magnitude > 0.0) || !std::isfinite(magnitude)) return 1.0;
  return std::ldexp(1.0, -static_cast<int>(std::lround(std::log2(magnitude))));
}

}  // namespace

BoundedSimplex::BoundedSimplex(const LinearProblem& problem, const SolverOptions& options)
    : problem_(problem), opt_(options) {
  n_ = static_cast<int>(problem.n_vars());
  m_ = static_cast<int>(problem.rows.size());
  total_ = n_ + m_;

  row_scale_.assign(m_, 1.0);
  col_scale_.assign(n_, 1.0);
  if (opt_.scale) {
    for (int i = 0; i < m_; ++i) {
      double big = 0.0;
      for (const Term& t : problem.rows[i].terms) big = std::max(big, std::abs(t.coef));
      row_scale_[i] = pow2_scale(big);
    }
    std::vector<double> col_big(n_, 0.0);
    for (int i = 0; i < m_; ++i) {
      for (const Term& t : problem.rows[i].terms) {
        col_big[t.var] = std::max(col_big[t.var], std::abs(t.coef) * row_scale_[i]);
      }
    }
    for (int j = 0; j < n_; ++j) col_scale_[j] = pow2_scale(col_big[j]);
  }

  std::vector<int> count(n_ + 1, 0);
  for (const Row& row : problem.rows) {
    for (const Term& t : row.terms) ++count[t.var + 1];
  }
  col_start_.assign(n_ + 1, 0);
  for (int j = 0; j < n_; ++j) col_start_[j + 1] = col_start_[j] + count[j + 1];
  col_row_.resize(col_start_[n_]);
  col_val_.resize(col_start_[n_]);
  std::vector<int> fill(col_start_.begin(), col_start_.end() - 1);
  for (int i = 0; i < m_; ++i) {
    for (const Term& t : problem.rows[i].terms) {
      const int k = fill[t.var]++;
      col_row_[k] = i;
      col_val_[k] = t.coef * row_scale_[i] * col_scale_[t.var];
    }
  }

  rhs_.resize(m_);
  slack_lo_.resize(m_);
  slack_up_.resize(m_);
  for (int i = 0; i < m_; ++i) {
    const Row& row = problem.rows[i];
    rhs_[i] = row.rhs * row_scale_[i];
    switch (row.relation) {
      case Relation::LessEqual:
        slack_lo_[i] = 0.0;
        slack_up_[i] = kInf;
        break;
      case Relation::GreaterEqual:
        slack_lo_[i] = -kInf;
        slack_up_[i] = 0.0;
        break;
      case Relation::Equal:
        slack_lo_[i] = 0.0;
        slack_up_[i] = 0.0;
        break;
    }
  }

  double cost_big = 0.0;
  for (int j = 0; j < n_; ++j) cost_big = std::max(cost_big, std::abs(problem.cost[j] * col_scale_[j]));
  cost_scale_ = opt_.scale ? pow2_scale(cost_big) : 1.0;
  cost_.assign(total_, 0.0);
  for (int j = 0; j < n_; ++j) cost_[j] = problem.cost[j] * col_scale_[j] * cost_scale_;

  max_iterations_ = opt_.max_iterations > 0 ? opt_.max_iterations
                                            : 50 * static_cast<std::int64_t>(std::max(n_, 1));

  lo_.resize(total_);
  up_.resize(total_);
  x_.assign(total_, 0.0);
  status_.assign(total_, VarStatus::AtLower);
  pos_.assign(total_, -1);
  y_.assign(m_, 0.0);
  d_.assign(total_, 0.0);
  work_.assign(m_, 0.0);
}

template <class F>
void BoundedSimplex::for_column(int j, F&& f) const {
  if (j < n_) {
    for (int k = col_start_[j]; k < col_start_[j + 1]; ++k) f(col_row_[k], col_val_[k]);
  } else {
    f(j - n_, 1.0);
  }
}

double BoundedSimplex::column_dot(int j, const std::vector<double>& v) const {
  if (j >= n_) return v[j - n_];
  double s = 0.0;
  for (int k = col_start_[j]; k < col_start_[j + 1]; ++k) s += v[col_row_[k]] * col_val_[k];
  return s;
}

void BoundedSimplex::load_bounds(std::span<const double> lower, std::span<const double> upper) {
  for (int j = 0; j < n_; ++j) {
    lo_[j] = lower[j] / col_scale_[j];
    up_[j] = upper[j] / col_scale_[j];
  }
  for (int i = 0; i < m_; ++i) {
    lo_[n_ + i] = slack_lo_[i];
    up_[n_ + i] = slack_up_[i];
  }
}

void BoundedSimplex::place_nonbasic(int j) {
  const bool has_lo = std::isfinite(lo_[j]);
  const bool has_up = std::isfinite(up_[j]);
  VarStatus& st = status_[j];
  switch (st) {
    case VarStatus::AtLower:
      if (!has_lo) st = has_up ? VarStatus::AtUpper : VarStatus::Free;
      break;
    case VarStatus::AtUpper:
      if (!has_up) st = has_lo ? VarStatus::AtLower : VarStatus::Free;
      break;
    case VarStatus::Free:
      if (has_lo) {
        st = VarStatus::AtLower;
      } else if (has_up) {
        st = VarStatus::AtUpper;
      }
      break;
    case VarStatus::Basic:
      break;
  }
}

void BoundedSimplex::set_basis(const Basis* warm) {
  bool usable = warm != nullptr && static_cast<int>(warm->status.size()) == total_;
  if (usable) {
    const auto basics = std::count(warm->status.begin(), warm->status.end(), VarStatus::Basic);
    usable = basics == m_;
  }
  if (usable) {
    status_ = warm->status;
  } else {
    for (int j = 0; j < n_; ++j) {
      status_[j] = cost_[j] < 0.0 && std::isfinite(up_[j]) ? VarStatus::AtUpper : VarStatus::AtLower;
    }
    for (int i = 0; i < m_; ++i) status_[n_ + i] = VarStatus::Basic;
  }
  for (int j = 0; j < total_; ++j) place_nonbasic(j);
}

double BoundedSimplex::nonbasic_value(int j) const {
  switch (status_[j]) {
    case VarStatus::AtLower:
      return lo_[j];
    case VarStatus::AtUpper:
      return up_[j];
    default:
      return 0.0;
  }
}

bool BoundedSimplex::factor() {
  pivots_since_factor_ = 0;
  head_.clear();
  std::fill(pos_.begin(), pos_.end(), -1);
  for (int j = 0; j < total_; ++j) {
    if (status_[j] == VarStatus::Basic) {
      pos_[j] = static_cast<int>(head_.size());
      head_.push_back(j);
    }
  }
  const auto m = static_cast<std::size_t>(m_);
  bool ok = head_.size() == m;

  std::vector<double> mat;
  if (ok) {
    mat.assign(m * m, 0.0);
    for (std::size_t c = 0; c < m; ++c) {
      for_column(head_[c], [&](int r, double v) { mat[r * m + c] += v; });
    }
    binv_.assign(m * m, 0.0);
    for (std::size_t i = 0; i < m; ++i) binv_[i * m + i] = 1.0;

    // Gauss-Jordan with partial pivoting on [B | I].
    for (std::size_t k = 0; k < m && ok; ++k) {
      std::size_t p = k;
      double best = std::abs(mat[k * m + k]);
      for (std::size_t i = k + 1; i < m; ++i) {
        const double v = std::abs(mat[i * m + k]);
        if (v > best) {
          best = v;
          p = i;
        }
      }
      if (best < kSingularTol) {
        ok = false;
        break;
      }
      if (p != k) {
        std::swap_ranges(mat.begin() + p * m, mat.begin() + (p + 1) * m, mat.begin() + k * m);
        std::swap_ranges(binv_.begin() + p * m, binv_.begin() + (p + 1) * m, binv_.begin() + k * m);
      }
      const double inv = 1.0 / mat[k * m + k];
      double* mk = &mat[k * m];
      double* bk = &binv_[k * m];
      for (std::size_t c = k; c < m; ++c) mk[c] *= inv;
      for (std::size_t c = 0; c < m; ++c) bk[c] *= inv;
      for (std::size_t i = 0; i < m; ++i) {
        if (i == k) continue;
        const double f = mat[i * m + k];
        if (f == 0.0) continue;
        double* mi = &mat[i * m];
        double* bi = &binv_[i * m];
        for (std::size_t c = k; c < m; ++c) mi[c] -= f * mk[c];
        for (std::size_t c = 0; c < m; ++c) bi[c] -= f * bk[c];
      }
    }
  }
  if (ok) return true;

  // Singular or malformed basis: restart from the slack basis.
  set_basis(nullptr);
  head_.clear();
  std::fill(pos_.begin(), pos_.end(), -1);
  for (int i = 0; i < m_; ++i) {
    pos_[n_ + i] = i;
    head_.push_back(n_ + i);
  }
  binv_.assign(m * m, 0.0);
  for (std::size_t i = 0; i < m; ++i) binv_[i * m + i] = 1.0;
  return false;
}

void BoundedSimplex::compute_primal() {
  std::vector<double> r(rhs_);
  for (int j = 0; j < total_; ++j) {
    if (status_[j] == VarStatus::Basic) continue;
    x_[j] = nonbasic_value(j);
    if (x_[j] != 0.0) {
      const double xj = x_[j];
      for_column(j, [&](int row, double v) { r[row] -= v * xj; });
    }
  }
  const auto m = static_cast<std::size_t>(m_);
  for (std::size_t i = 0; i < m; ++i) {
    const double* bi = &binv_[i * m];
    double s = 0.0;
    for (std::size_t k = 0; k < m; ++k) s += bi[k] * r[k];
    x_[head_[i]] = s;
  }
}

void BoundedSimplex::compute_duals(bool phase_one) {
  const auto m = static_cast<std::size_t>(m_);
  std::fill(y_.begin(), y_.end(), 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    const int j = head_[i];
    double cb;
    if (phase_one) {
      if (x_[j] < lo_[j] - opt_.feas_tol) {
        cb = -1.0;
      } else if (x_[j] > up_[j] + opt_.feas_tol) {
        cb = 1.0;
      } else {
        cb = 0.0;
      }
    } else {
      cb = cost_[j];
    }
    if (cb == 0.0) continue;
    const double* bi = &binv_[i * m];
    for (std::size_t k = 0; k < m; ++k) y_[k] += cb * bi[k];
  }
  for (int j = 0; j < total_; ++j) {
    if (status_[j] == VarStatus::Basic) {
      d_[j] = 0.0;
    } else {
      d_[j] = (phase_one ? 0.0 : cost_[j]) - column_dot(j, y_);
    }
  }
}

void BoundedSimplex::flip_to_dual_feasible() {
  bool flipped = false;
  for (int j = 0; j < total_; ++j) {
    if (status_[j] == VarStatus::AtLower && d_[j] < -opt_.opt_tol && std::isfinite(up_[j])) {
      status_[j] = VarStatus::AtUpper;
      flipped = true;
    } else if (status_[j] == VarStatus::AtUpper && d_[j] > opt_.opt_tol && std::isfinite(lo_[j])) {
      status_[j] = VarStatus::AtLower;
      flipped = true;
    }
  }
  if (flipped) compute_primal();
}

bool BoundedSimplex::dual_feasible() const {
  for (int j = 0; j < total_; ++j) {
    if (lo_[j] == up_[j]) continue;
    switch (status_[j]) {
      case VarStatus::AtLower:
        if (d_[j] < -opt_.opt_tol) return false;
        break;
      case VarStatus::AtUpper:
        if (d_[j] > opt_.opt_tol) return false;
        break;
      case VarStatus::Free:
        if (std::abs(d_[j]) > opt_.opt_tol) return false;
        break;
      case VarStatus::Basic:
        break;
    }
  }
  return true;
}

bool BoundedSimplex::primal_feasible() const {
  for (int j : head_) {
    if (x_[j] < lo_[j] - opt_.feas_tol || x_[j] > up_[j] + opt_.feas_tol) return false;
  }
  return true;
}

void BoundedSimplex::pivot(int row, int entering, const std::vector<double>& alpha) {
  const auto m = static_cast<std::size_t>(m_);
  const int leaving = head_[row];
  pos_[leaving] = -1;
  head_[row] = entering;
  pos_[entering] = row;
  status_[entering] = VarStatus::Basic;

  double* br = &binv_[row * m];
  const double inv = 1.0 / alpha[row];
  for (std::size_t c = 0; c < m; ++c) br[c] *= inv;
  for (std::size_t i = 0; i < m; ++i) {
    if (static_cast<int>(i) == row || alpha[i] == 0.0) continue;
    const double f = alpha[i];
    double* bi = &binv_[i * m];
    for (std::size_t c = 0; c < m; ++c) bi[c] -= f * br[c];
  }
  if (++pivots_since_factor_ >= kRefactorInterval) {
    factor();
    compute_primal();
  }
}

SolveStatus BoundedSimplex::primal() {
  const auto m = static_cast<std::size_t>(m_);
  std::vector<double> alpha(m);
  int degenerate = 0;
  bool bland = false;
  while (true) {
    if (iterations_ >= max_iterations_) return SolveStatus::IterationLimit;
    const bool phase_one = !primal_feasible();
    compute_duals(phase_one);

    int q = -1;
    int dir = 0;
    double best = 0.0;
    for (int j = 0; j < total_; ++j) {
      const VarStatus st = status_[j];
      if (st == VarStatus::Basic || lo_[j] == up_[j]) continue;
      const double dj = d_[j];
      int cand = 0;
      if ((st == VarStatus::AtLower || st == VarStatus::Free) && dj < -opt_.opt_tol) {
        cand = 1;
      } else if ((st == VarStatus::AtUpper || st == VarStatus::Free) && dj > opt_.opt_tol) {
        cand = -1;
      }
      if (cand == 0) continue;
      if (bland) {
        q = j;
        dir = cand;
        break;
      }
      if (std::abs(dj) > best) {
        best = std::abs(dj);
        q = j;
        dir = cand;
      }
    }
    if (q < 0) return phase_one ? SolveStatus::Infeasible : SolveStatus::Optimal;

    std::fill(alpha.begin(), alpha.end(), 0.0);
    for_column(q, [&](int r, double v) {
      for (std::size_t i = 0; i < m; ++i) alpha[i] += binv_[i * m + r] * v;
    });

    double theta = std::isfinite(lo_[q]) && std::isfinite(up_[q]) ? up_[q] - lo_[q] : kInf;
    int leave = -1;
    bool leave_upper = false;
    for (std::size_t i = 0; i < m; ++i) {
      const double a = alpha[i];
      if (std::abs(a) < kPivotTol) continue;
      const double rate = -dir * a;
      const int jb = head_[i];
      const double xb = x_[jb];
      const double l = lo_[jb];
      const double u = up_[jb];
      double lim = kInf;
      bool to_upper = false;
      if (phase_one && xb < l - opt_.feas_tol) {
        if (rate > 0.0) lim = (l - xb) / rate;
      } else if (phase_one && xb > u + opt_.feas_tol) {
        if (rate < 0.0) {
          lim = (xb - u) / -rate;
          to_upper = true;
        }
      } else if (rate < 0.0 && std::isfinite(l)) {
        lim = std::max(0.0, xb - l) / -rate;
      } else if (rate > 0.0 && std::isfinite(u)) {
        lim = std::max(0.0, u - xb) / rate;
        to_upper = true;
      }
      if (!std::isfinite(lim)) continue;
      bool take = lim < theta - kTieTol;
      if (!take && leave >= 0 && std::abs(lim - theta) <= kTieTol) {
        take = bland ? jb < head_[leave] : std::abs(a) > std::abs(alpha[leave]);
      }
      if (take) {
        theta = lim;
        leave = static_cast<int>(i);
        leave_upper = to_upper;
      }
    }
    if (!std::isfinite(theta)) {
      return phase_one ? SolveStatus::Infeasible : SolveStatus::Unbounded;
    }

    ++iterations_;
    x_[q] += dir * theta;
    for (std::size_t i = 0; i < m; ++i) {
      if (alpha[i] != 0.0) x_[head_[i]] -= dir * alpha[i] * theta;
    }
    if (leave < 0) {
      status_[q] = dir > 0 ? VarStatus::AtUpper : VarStatus::AtLower;
      x_[q] = dir > 0 ? up_[q] : lo_[q];
    } else {
      const int jl = head_[leave];
      status_[jl] = leave_upper ? VarStatus::AtUpper : VarStatus::AtLower;
      x_[jl] = leave_upper ? up_[jl] : lo_[jl];
      pivot(leave, q, alpha);
    }
    if (theta <= kTieTol) {
      bland = ++degenerate > kDegenerateLimit;
    } else {
      degenerate = 0;
      bland = false;
    }
  }
}

bool BoundedSimplex::proves_infeasible(int row, bool raise) const {
  const auto m = static_cast<std::size_t>(m_);
  const std::vector<double> rho(binv_.begin() + row * m, binv_.begin() + (row + 1) * m);
  const int jr = head_[row];
  double reach = 0.0;
  for (int j = 0; j < total_; ++j) {
    if (status_[j] == VarStatus::Basic) continue;
    const double a = column_dot(j, rho);
    if (a == 0.0) continue;
    // x_r moves by -a per unit increase of x_j.
    const bool increase_j = raise ? a < 0.0 : a > 0.0;
    const double room = increase_j ? up_[j] - x_[j] : x_[j] - lo_[j];
    if (!std::isfinite(room)) return false;
    reach += std::abs(a) * std::max(0.0, room);
  }
  return raise ? x_[jr] + reach < lo_[jr] - opt_.feas_tol : x_[jr] - reach > up_[jr] + opt_.feas_tol;
}

BoundedSimplex::DualResult BoundedSimplex::dual() {
  const auto m = static_cast<std::size_t>(m_);
  std::vector<double> alpha(m);
  std::vector<double> rho(m);
  int degenerate = 0;
  bool bland = false;
  while (true) {
    if (iterations_ >= max_iterations_) return DualResult::IterationLimit;
    compute_duals(false);
    if (!dual_feasible()) return DualResult::NeedPrimal;

    int r = -1;
    double worst = 0.0;
    bool raise = false;
    for (std::size_t i = 0; i < m; ++i) {
      const int jb = head_[i];
      double v;
      bool up_dir;
      if (x_[jb] < lo_[jb] - opt_.feas_tol) {
        v = lo_[jb] - x_[jb];
        up_dir = true;
      } else if (x_[jb] > up_[jb] + opt_.feas_tol) {
        v = x_[jb] - up_[jb];
        up_dir = false;
      } else {
        continue;
      }
      const bool take = bland ? (r < 0 || jb < head_[r]) : v > worst;
      if (take) {
        worst = v;
        r = static_cast<int>(i);
        raise = up_dir;
      }
    }
    if (r < 0) return DualResult::Optimal;

    std::copy(binv_.begin() + r * m, binv_.begin() + (r + 1) * m, rho.begin());
    int q = -1;
    double best_ratio = kInf;
    double best_abs = 0.0;
    for (int j = 0; j < total_; ++j) {
      const VarStatus st = status_[j];
      if (st == VarStatus::Basic || lo_[j] == up_[j]) continue;
      const double a = column_dot(j, rho);
      if (std::abs(a) < kPivotTol) continue;
      double dm;
      if (st == VarStatus::Free) {
        dm = std::abs(d_[j]);
      } else if (st == VarStatus::AtLower) {
        if (raise ? a > 0.0 : a < 0.0) continue;
        dm = std::max(d_[j], 0.0);
      } else {
        if (raise ? a < 0.0 : a > 0.0) continue;
        dm = std::max(-d_[j], 0.0);
      }
      const double ratio = dm / std::abs(a);
      bool take = ratio < best_ratio - kTieTol;
      if (!take && q >= 0 && std::abs(ratio - best_ratio) <= kTieTol) {
        take = bland ? j < q : std::abs(a) > best_abs;
      }
      if (take) {
        best_ratio = ratio;
        best_abs = std::abs(a);
        q = j;
      }
    }
    if (q < 0) return proves_infeasible(r, raise) ? DualResult::Infeasible : DualResult::NeedPrimal;

    std::fill(alpha.begin(), alpha.end(), 0.0);
    for_column(q, [&](int row, double v) {
      for (std::size_t i = 0; i < m; ++i) alpha[i] += binv_[i * m + row] * v;
    });
    if (std::abs(alpha[r]) < kPivotTol) return DualResult::NeedPrimal;

    const int jr = head_[r];
    const double target = raise ? lo_[jr] : up_[jr];
    const double delta = (x_[jr] - target) / alpha[r];
    ++iterations_;
    x_[q] += delta;
    for (std::size_t i = 0; i < m; ++i) {
      if (alpha[i] != 0.0) x_[head_[i]] -= alpha[i] * delta;
    }
    x_[jr] = target;
    status_[jr] = raise ? VarStatus::AtLower : VarStatus::AtUpper;
    pivot(r, q, alpha);

    if (best_ratio <= kTieTol) {
      bland = ++degenerate > kDegenerateLimit;
    } else {
      degenerate = 0;
      bland = false;
    }
  }
}

LpOutcome BoundedSimplex::solve(std::span<const double> lower, std::span<const double> upper,
                                const Basis* warm) {
  iterations_ = 0;
  load_bounds(lower, upper);
  for (int j = 0; j < n_; ++j) {
    if (lo_[j] > up_[j]) {
      LpOutcome out;
      out.status = SolveStatus::Infeasible;
      return out;
    }
  }
  set_basis(warm);
  factor();
  compute_primal();
  compute_duals(false);
  flip_to_dual_feasible();

  SolveStatus status = SolveStatus::Optimal;
  bool run_primal = true;
  if (dual_feasible()) {
    switch (dual()) {
      case DualResult::Infeasible:
        status = SolveStatus::Infeasible;
        run_primal = false;
        break;
      case DualResult::IterationLimit:
        status = SolveStatus::IterationLimit;
        run_primal = false;
        break;
      default:
        break;
    }
  }
  if (run_primal) status = primal();
  if (status == SolveStatus::Optimal) {
    factor();
    compute_primal();
    if (!primal_feasible()) status = primal();
  }

  LpOutcome out;
  out.status = status;
  out.iterations = iterations_;
  out.x.resize(n_);
  for (int j = 0; j < n_; ++j) {
    double v = x_[j] * col_scale_[j];
    // snap to the unscaled bounds the caller asked for
    v = std::clamp(v, lower[j], upper[j]);
    out.x[j] = v;
  }
  double obj = 0.0;
  for (int j = 0; j < n_; ++j) obj += problem_.cost[j] * out.x[j];
  out.objective = obj;
  return out;
}

}  // namespace vpp::milp::detail
