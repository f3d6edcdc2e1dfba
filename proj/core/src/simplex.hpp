#pragma once

// Internal: bounded-variable revised simplex used by solve_lp / solve_milp.

#include <cstdint>
#include <span>
#include <vector>

#include "vpp/milp.hpp"

namespace vpp::milp::detail {

enum class VarStatus : std::int8_t { Basic, AtLower, AtUpper, Free };

/// Status of every column (structurals first, then one slack per row).
struct Basis {
  std::vector<VarStatus> status;
};

struct LpOutcome {
  SolveStatus status = SolveStatus::Infeasible;
  std::vector<double> x;  // unscaled structural values
  double objective = 0.0;
  std::int64_t iterations = 0;
};

/// Holds the scaled standard form  A x + s = b  of one LinearProblem and the
/// working state (basis inverse, primal and dual values). One instance solves
/// many LPs that differ only in variable bounds, which is what branch and
/// bound needs.
class BoundedSimplex {
 public:
  BoundedSimplex(const LinearProblem& problem, const SolverOptions& options);

  /// `lower`/`upper` are unscaled structural bounds. A warm basis is used
  /// when given and shape-compatible; otherwise the slack basis.
  LpOutcome solve(std::span<const double> lower, std::span<const double> upper,
                  const Basis* warm);

  Basis basis() const { return Basis{status_}; }

 private:
  enum class Phase { Feasibility, Optimality };
  enum class DualResult { Optimal, Infeasible, NeedPrimal, IterationLimit };

  // column access
  template <class F>
  void for_column(int j, F&& f) const;
  double column_dot(int j, const std::vector<double>& v) const;

  void load_bounds(std::span<const double> lower, std::span<const double> upper);
  void set_basis(const Basis* warm);
  void place_nonbasic(int j);
  double nonbasic_value(int j) const;
  bool factor();
  void compute_primal();
  void compute_duals(bool phase_one);
  void flip_to_dual_feasible();
  bool dual_feasible() const;
  bool primal_feasible() const;
  void pivot(int row, int entering, const std::vector<double>& alpha);

  SolveStatus primal();
  DualResult dual();
  bool proves_infeasible(int row, bool raise) const;

  const LinearProblem& problem_;
  SolverOptions opt_;
  int n_ = 0;
  int m_ = 0;
  int total_ = 0;

  std::vector<int> col_start_;
  std::vector<int> col_row_;
  std::vector<double> col_val_;
  std::vector<double> rhs_;
  std::vector<double> cost_;
  std::vector<double> row_scale_;
  std::vector<double> col_scale_;
  double cost_scale_ = 1.0;
  std::vector<double> slack_lo_;
  std::vector<double> slack_up_;

  std::vector<double> lo_;
  std::vector<double> up_;
  std::vector<double> x_;
  std::vector<VarStatus> status_;
  std::vector<int> head_;
  std::vector<int> pos_;
  std::vector<double> binv_;  // m x m, row-major; row i belongs to head_[i]
  std::vector<double> y_;
  std::vector<double> d_;
  std::vector<double> work_;

  int pivots_since_factor_ = 0;
  std::int64_t iterations_ = 0;
  std::int64_t max_iterations_ = 0;
};

}  // namespace vpp::milp::detail
