#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace vpp::milp {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class Relation { LessEqual, Equal, GreaterEqual };

struct Term {
  std::size_t var;
  double coef;
};

struct Row {
  std::vector<Term> terms;
  Relation relation = Relation::LessEqual;
  double rhs = 0.0;
  std::string name;
};

/// min cost'x  s.t. rows, lower <= x <= upper, x_i in {0,1} where binary.
struct LinearProblem {
  std::vector<double> cost;
  std::vector<double> lower;
  std::vector<double> upper;
  std::vector<bool> binary;
  std::vector<std::string> names;
  std::vector<Row> rows;

  std::size_t n_vars() const noexcept { return cost.size(); }
  std::size_t n_binaries() const;

  std::size_t add_variable(std::string name, double lo, double up, double c = 0.0,
                           bool is_binary = false);
  std::size_t add_binary(std::string name, double c = 0.0) {
    return add_variable(std::move(name), 0.0, 1.0, c, true);
  }
  std::size_t add_row(std::vector<Term> terms, Relation rel, double rhs, std::string name = {});

  /// Throws std::invalid_argument on a broken invariant (bounds order, binary
  /// bounds outside [0,1], out-of-range indices, NaN data).
  void validate() const;
};

enum class SolveStatus { Optimal, Infeasible, Unbounded, IterationLimit, NodeLimit };

const char* to_string(SolveStatus status);

struct SolveStats {
  std::int64_t nodes = 0;
  std::int64_t iterations = 0;
  double wall_ms = 0.0;
};

struct Solution {
  SolveStatus status = SolveStatus::Infeasible;
  std::vector<double> values;
  double objective = 0.0;
  SolveStats stats;

  bool optimal() const noexcept { return status == SolveStatus::Optimal; }
};

struct SolverOptions {
  double feas_tol = 1e-7;   // primal feasibility on scaled data
  double opt_tol = 1e-7;    // reduced-cost tolerance on scaled data
  double int_tol = 1e-6;
  double abs_gap = 1e-6;    // EUR
  std::int64_t max_iterations = 0;  // per LP; 0 means 50 * n_vars
  std::int64_t max_nodes = 200000;
  bool scale = true;
};

/// Bounded-variable revised simplex on the LP relaxation (binary flags are
/// ignored, binaries keep their [0,1] bounds).
Solution solve_lp(const LinearProblem& problem, const SolverOptions& options = {});

/// Best-first branch-and-bound over the binary variables. Node LPs are warm
/// started from the parent basis with the dual simplex.
Solution solve_milp(const LinearProblem& problem, const SolverOptions& options = {});

struct FeasibilityReport {
  std::vector<double> row_violation;    // >= 0 per row
  std::vector<double> bound_violation;  // >= 0 per variable
  std::vector<double> integrality;      // distance to {0,1}, 0 for continuous
  double max_row = 0.0;
  double max_bound = 0.0;
  double max_integrality = 0.0;

  double max_residual() const noexcept { return max_row > max_bound ? max_row : max_bound; }
  /// Indices of rows whose violation exceeds `tol`.
  std::vector<std::size_t> violated_rows(double tol) const;
};

/// Throws std::invalid_argument when `point` has the wrong dimension.
FeasibilityReport check_feasible(const LinearProblem& problem, std::span<const double> point);

double evaluate_objective(const LinearProblem& problem, std::span<const double> point);

/// Plain-text dump, one line per variable and per row:
///
///   vpplab-lp 1
///   vars <n>
///   v <index> <name> <lower> <upper> <cost> <C|B>
///   rows <m>
///   r <index> <name> <le|eq|ge> <rhs> <count> <var>:<coef> ...
///
/// Infinite bounds print as `-inf` / `inf`; numbers use 17 significant digits.
void write_problem(std::ostream& out, const LinearProblem& problem);

}  // namespace vpp::milp
