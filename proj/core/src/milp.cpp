#include "vpp/milp.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <memory>
#include <ostream>
#include <optional>
#include <queue>
#include <sstream>
#include <stdexcept>

#include "simplex.hpp"

namespace vpp::milp {

std::size_t LinearProblem::n_binaries() const {
  return static_cast<std::size_t>(std::count(binary.begin(), binary.end(), true));
}

std::size_t LinearProblem::add_variable(std::string name, double lo, double up, double c,
                                        bool is_binary) {
  cost.push_back(c);
  lower.push_back(lo);
  upper.push_back(up);
  binary.push_back(is_binary);
  names.push_back(std::move(name));
  return cost.size() - 1;
}

std::size_t LinearProblem::add_row(std::vector<Term> terms, Relation rel, double rhs,
                                   std::string name) {
  rows.push_back(Row{std::move(terms), rel, rhs, std::move(name)});
  return rows.size() - 1;
}

void LinearProblem::validate() const {
  const std::size_t n = n_vars();
  if (lower.size() != n || upper.size() != n || binary.size() != n) {
    throw std::invalid_argument("LinearProblem: cost/bound/binary vectors differ in length");
  }
  for (std::size_t j = 0; j < n; ++j) {
    if (std::isnan(cost[j]) || !std::isfinite(cost[j])) {
      throw std::invalid_argument("LinearProblem: non-finite cost on variable " + std::to_string(j));
    }
    if (std::isnan(lower[j]) || std::isnan(upper[j]) || lower[j] > upper[j]) {
      throw std::invalid_argument("LinearProblem: lower > upper on variable " + std::to_string(j));
    }
    if (binary[j] && (lower[j] < 0.0 || upper[j] > 1.0)) {
      throw std::invalid_argument("LinearProblem: binary variable " + std::to_string(j) +
                                  " has bounds outside [0, 1]");
    }
  }
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (!std::isfinite(rows[i].rhs)) {
      throw std::invalid_argument("LinearProblem: non-finite rhs on row " + std::to_string(i));
    }
    for (const Term& t : rows[i].terms) {
      if (t.var >= n) {
        throw std::invalid_argument("LinearProblem: row " + std::to_string(i) +
                                    " references variable " + std::to_string(t.var));
      }
      if (!std::isfinite(t.coef)) {
        throw std::invalid_argument("LinearProblem: non-finite coefficient on row " +
                                    std::to_string(i));
      }
    }
  }
}

const char* to_string(SolveStatus status) {
  switch (status) {
    case SolveStatus::Optimal:
      return "optimal";
    case SolveStatus::Infeasible:
      return "infeasible";
    case SolveStatus::Unbounded:
      return "unbounded";
    case SolveStatus::IterationLimit:
      return "iteration_limit";
    case SolveStatus::NodeLimit:
      return "node_limit";
  }
  return "unknown";
}

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point since) {
  return std::chrono::duration<double, std::milli>(Clock::now() - since).count();
}

struct Node {
  double bound;
  int depth;
  std::int64_t seq;
  std::vector<std::pair<std::size_t, double>> fixes;
  std::shared_ptr<const detail::Basis> basis;
};

// Best-first: lowest bound, then deepest, then oldest.
struct NodeOrder {
  bool operator()(const Node& a, const Node& b) const {
    if (a.bound != b.bound) return a.bound > b.bound;
    if (a.depth != b.depth) return a.depth < b.depth;
    return a.seq > b.seq;
  }
};

}  // namespace

Solution solve_lp(const LinearProblem& problem, const SolverOptions& options) {
  problem.validate();
  const auto start = Clock::now();
  detail::BoundedSimplex simplex(problem, options);
  const detail::LpOutcome out = simplex.solve(problem.lower, problem.upper, nullptr);
  Solution sol;
  sol.status = out.status;
  sol.values = out.x;
  sol.objective = out.objective;
  sol.stats.nodes = 1;
  sol.stats.iterations = out.iterations;
  sol.stats.wall_ms = elapsed_ms(start);
  return sol;
}

Solution solve_milp(const LinearProblem& problem, const SolverOptions& options) {
  problem.validate();
  const auto start = Clock::now();
  const std::size_t n = problem.n_vars();

  detail::BoundedSimplex simplex(problem, options);
  Solution best;
  best.status = SolveStatus::Infeasible;
  double incumbent = kInf;
  bool limit_hit = false;
  bool iteration_trouble = false;

  std::vector<double> lo(problem.lower);
  std::vector<double> up(problem.upper);

  std::priority_queue<Node, std::vector<Node>, NodeOrder> open;
  std::int64_t seq = 0;
  open.push(Node{-kInf, 0, seq++, {}, nullptr});

  // Fix every binary at its rounded (or ceiled) value and take the LP as an
  // incumbent when feasible.
  auto try_rounding = [&](const std::vector<double>& x, bool ceil_up) {
    lo = problem.lower;
    up = problem.upper;
    for (std::size_t j = 0; j < n; ++j) {
      if (!problem.binary[j]) continue;
      lo[j] = up[j] = ceil_up ? std::ceil(x[j] - options.int_tol) : std::round(x[j]);
    }
    const detail::LpOutcome r = simplex.solve(lo, up, nullptr);
    best.stats.iterations += r.iterations;
    if (r.status == SolveStatus::Optimal && r.objective < incumbent - options.abs_gap) {
      incumbent = r.objective;
      best.status = SolveStatus::Optimal;
      best.values = r.x;
      best.objective = r.objective;
    }
  };

  std::optional<Node> dive;
  while (dive || !open.empty()) {
    Node node;
    if (dive) {
      node = std::move(*dive);
      dive.reset();
    } else {
      node = open.top();
      open.pop();
    }
    if (node.bound >= incumbent - options.abs_gap) {
      if (open.empty() || open.top().bound >= incumbent - options.abs_gap) break;
      continue;
    }
    if (best.stats.nodes >= options.max_nodes) {
      limit_hit = true;
      break;
    }

    lo = problem.lower;
    up = problem.upper;
    for (const auto& [var, value] : node.fixes) {
      lo[var] = value;
      up[var] = value;
    }
    const detail::LpOutcome lp = simplex.solve(lo, up, node.basis.get());
    ++best.stats.nodes;
    best.stats.iterations += lp.iterations;

    if (lp.status == SolveStatus::Infeasible) continue;
    if (lp.status == SolveStatus::Unbounded) {
      if (node.depth == 0) {
        best.status = SolveStatus::Unbounded;
        best.stats.wall_ms = elapsed_ms(start);
        return best;
      }
      continue;
    }
    if (lp.status == SolveStatus::IterationLimit) {
      iteration_trouble = true;
      continue;
    }
    if (lp.objective >= incumbent - options.abs_gap) continue;

    // most fractional binary, lowest index on ties
    std::size_t branch = n;
    double most = options.int_tol;
    for (std::size_t j = 0; j < n; ++j) {
      if (!problem.binary[j]) continue;
      const double frac = std::abs(lp.x[j] - std::round(lp.x[j]));
      if (frac > most) {
        most = frac;
        branch = j;
      }
    }
    if (branch == n) {
      incumbent = lp.objective;
      best.status = SolveStatus::Optimal;
      best.values = lp.x;
      best.objective = lp.objective;
      continue;
    }

    auto basis = std::make_shared<const detail::Basis>(simplex.basis());
    if (node.depth == 0) {
      try_rounding(lp.x, false);
      try_rounding(lp.x, true);
    }
    // Until an incumbent exists the rounding-side child is processed next.
    const double near = std::round(lp.x[branch]);
    for (double value : {1.0 - near, near}) {
      Node child{lp.objective, node.depth + 1, seq++, node.fixes, basis};
      child.fixes.emplace_back(branch, value);
      if (value == near && incumbent == kInf) {
        dive = std::move(child);
      } else {
        open.push(std::move(child));
      }
    }
  }

  if (best.status == SolveStatus::Optimal) {
    // Polish: fix binaries at their rounded values and re-solve for clean
    // continuous values.
    lo = problem.lower;
    up = problem.upper;
    for (std::size_t j = 0; j < n; ++j) {
      if (problem.binary[j]) lo[j] = up[j] = std::round(best.values[j]);
    }
    const detail::LpOutcome polish = simplex.solve(lo, up, nullptr);
    best.stats.iterations += polish.iterations;
    if (polish.status == SolveStatus::Optimal && polish.objective <= best.objective + options.abs_gap) {
      best.values = polish.x;
      best.objective = polish.objective;
    } else {
      for (std::size_t j = 0; j < n; ++j) {
        if (problem.binary[j]) best.values[j] = std::round(best.values[j]);
      }
    }
    if (limit_hit) best.status = SolveStatus::NodeLimit;
  } else if (limit_hit) {
    best.status = SolveStatus::NodeLimit;
  } else if (iteration_trouble) {
    best.status = SolveStatus::IterationLimit;
  }
  best.stats.wall_ms = elapsed_ms(start);
  return best;
}

std::vector<std::size_t> FeasibilityReport::violated_rows(double tol) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < row_violation.size(); ++i) {
    if (row_violation[i] > tol) out.push_back(i);
  }
  return out;
}

FeasibilityReport check_feasible(const LinearProblem& problem, std::span<const double> point) {
  if (point.size() != problem.n_vars()) {
    throw std::invalid_argument("check_feasible: point has " + std::to_string(point.size()) +
                                " entries, problem has " + std::to_string(problem.n_vars()));
  }
  FeasibilityReport rep;
  rep.row_violation.resize(problem.rows.size());
  for (std::size_t i = 0; i < problem.rows.size(); ++i) {
    const Row& row = problem.rows[i];
    double lhs = 0.0;
    for (const Term& t : row.terms) lhs += t.coef * point[t.var];
    double v = 0.0;
    switch (row.relation) {
      case Relation::LessEqual:
        v = std::max(0.0, lhs - row.rhs);
        break;
      case Relation::GreaterEqual:
        v = std::max(0.0, row.rhs - lhs);
        break;
      case Relation::Equal:
        v = std::abs(lhs - row.rhs);
        break;
    }
    rep.row_violation[i] = v;
    rep.max_row = std::max(rep.max_row, v);
  }
  rep.bound_violation.resize(point.size());
  rep.integrality.resize(point.size(), 0.0);
  for (std::size_t j = 0; j < point.size(); ++j) {
    const double v = std::max({0.0, problem.lower[j] - point[j], point[j] - problem.upper[j]});
    rep.bound_violation[j] = v;
    rep.max_bound = std::max(rep.max_bound, v);
    if (problem.binary[j]) {
      rep.integrality[j] = std::abs(point[j] - std::round(point[j]));
      rep.max_integrality = std::max(rep.max_integrality, rep.integrality[j]);
    }
  }
  return rep;
}

double evaluate_objective(const LinearProblem& problem, std::span<const double> point) {
  double s = 0.0;
  for (std::size_t j = 0; j < problem.n_vars(); ++j) s += problem.cost[j] * point[j];
  return s;
}

namespace {

std::string fmt_number(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

std::string token(const std::string& name, const char* fallback, std::size_t index) {
  if (name.empty()) return fallback + std::to_string(index);
  std::string out = name;
  std::replace_if(out.begin(), out.end(), [](char c) { return std::isspace(static_cast<unsigned char>(c)); }, '_');
  return out;
}

}  // namespace

void write_problem(std::ostream& out, const LinearProblem& problem) {
  out << "vpplab-lp 1\n";
  out << "vars " << problem.n_vars() << '\n';
  for (std::size_t j = 0; j < problem.n_vars(); ++j) {
    out << "v " << j << ' ' << token(problem.names.size() > j ? problem.names[j] : "", "x", j) << ' '
        << fmt_number(problem.lower[j]) << ' ' << fmt_number(problem.upper[j]) << ' '
        << fmt_number(problem.cost[j]) << ' ' << (problem.binary[j] ? 'B' : 'C') << '\n';
  }
  out << "rows " << problem.rows.size() << '\n';
  for (std::size_t i = 0; i < problem.rows.size(); ++i) {
    const Row& row = problem.rows[i];
    const char* rel = row.relation == Relation::LessEqual ? "le"
                      : row.relation == Relation::Equal   ? "eq"
                                                          : "ge";
    out << "r " << i << ' ' << token(row.name, "r", i) << ' ' << rel << ' ' << fmt_number(row.rhs)
        << ' ' << row.terms.size();
    for (const Term& t : row.terms) out << ' ' << t.var << ':' << fmt_number(t.coef);
    out << '\n';
  }
}

}  // namespace vpp::milp
