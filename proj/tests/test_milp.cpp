#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "support/random_milp.hpp"
#include "vpp/milp.hpp"

using namespace vpp::milp;

namespace {

// Minimum of c'x over a bounded 2-variable polytope by enumerating every
// intersection of two constraint or bound lines.
struct Line {
  double a, b, rhs;
};

std::optional<double> vertex_oracle(const LinearProblem& lp) {
  std::vector<Line> lines;
  for (const Row& r : lp.rows) {
    double a = 0, b = 0;
    for (const Term& t : r.terms) (t.var == 0 ? a : b) += t.coef;
    lines.push_back({a, b, r.rhs});
  }
  lines.push_back({1, 0, lp.lower[0]});
  lines.push_back({1, 0, lp.upper[0]});
  lines.push_back({0, 1, lp.lower[1]});
  lines.push_back({0, 1, lp.upper[1]});
  std::optional<double> best;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    for (std::size_t j = i + 1; j < lines.size(); ++j) {
      const double det = lines[i].a * lines[j].b - lines[i].b * lines[j].a;
      if (std::abs(det) < 1e-12) continue;
      const double x = (lines[i].rhs * lines[j].b - lines[i].b * lines[j].rhs) / det;
      const double y = (lines[i].a * lines[j].rhs - lines[i].rhs * lines[j].a) / det;
      const std::vector<double> p{x, y};
      if (check_feasible(lp, p).max_residual() > 1e-9) continue;
      const double obj = lp.cost[0] * x + lp.cost[1] * y;
      if (!best || obj < *best) best = obj;
    }
  }
  return best;
}

}  // namespace

TEST(SolveLp, BoundAttainedOptimum) {
  LinearProblem lp;
  lp.add_variable("x", 0.0, 5.0, 1.0);
  const Solution s = solve_lp(lp);
  ASSERT_EQ(s.status, SolveStatus::Optimal);
  EXPECT_DOUBLE_EQ(s.values[0], 0.0);
  EXPECT_DOUBLE_EQ(s.objective, 0.0);
}

TEST(SolveLp, TwoVariableSimplexCorner) {
  LinearProblem lp;
  lp.add_variable("x", 0, 1, -1);
  lp.add_variable("y", 0, 1, -1);
  lp.add_row({{0, 1}, {1, 1}}, Relation::LessEqual, 1);
  const Solution s = solve_lp(lp);
  ASSERT_TRUE(s.optimal());
  EXPECT_NEAR(s.objective, -1.0, 1e-9);
  EXPECT_NEAR(*vertex_oracle(lp), -1.0, 1e-12);
}

TEST(SolveLp, EmptyFeasibleSetIsInfeasible) {
  LinearProblem lp;
  lp.add_variable("x", -kInf, kInf, 1.0);
  lp.add_row({{0, 1}}, Relation::GreaterEqual, 1);
  lp.add_row({{0, 1}}, Relation::LessEqual, 0);
  EXPECT_EQ(solve_lp(lp).status, SolveStatus::Infeasible);
}

TEST(SolveLp, UnboundedDirectionDetected) {
  LinearProblem lp;
  lp.add_variable("x", 0, kInf, -1.0);
  lp.add_variable("y", 0, 3, 0.0);
  lp.add_row({{0, 1}, {1, -1}}, Relation::GreaterEqual, 0);
  EXPECT_EQ(solve_lp(lp).status, SolveStatus::Unbounded);
}

TEST(SolveLp, MatchesVertexEnumerationOnRandomPolygons) {
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> u(-5, 5);
  int solved = 0;
  for (int k = 0; k < 300; ++k) {
    LinearProblem lp;
    lp.add_variable("x", -u(rng) - 5, u(rng) + 5, u(rng));
    lp.add_variable("y", -u(rng) - 5, u(rng) + 5, u(rng));
    const int rows = 1 + k % 5;
    for (int i = 0; i < rows; ++i) {
      lp.add_row({{0, u(rng)}, {1, u(rng)}}, i % 2 ? Relation::LessEqual : Relation::GreaterEqual, u(rng));
    }
    const auto oracle = vertex_oracle(lp);
    const Solution s = solve_lp(lp);
    if (!oracle) {
      EXPECT_EQ(s.status, SolveStatus::Infeasible) << "instance " << k;
      continue;
    }
    ASSERT_EQ(s.status, SolveStatus::Optimal) << "instance " << k;
    EXPECT_NEAR(s.objective, *oracle, 1e-7 * (1 + std::abs(*oracle))) << "instance " << k;
    ++solved;
  }
  EXPECT_GT(solved, 100);
}

TEST(SolveLp, WeakDualitySpotCheck) {
  std::mt19937_64 rng(7);
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    LinearProblem lp = vpptest::random_milp(seed);
    std::fill(lp.binary.begin(), lp.binary.end(), false);
    const Solution s = solve_lp(lp);
    ASSERT_TRUE(s.optimal());
    // random points on the segment between the optimum and other feasible LP
    // solutions obtained with perturbed costs
    for (int k = 0; k < 5; ++k) {
      LinearProblem other = lp;
      std::uniform_real_distribution<double> u(-10, 10);
      for (double& c : other.cost) c = u(rng);
      const Solution o = solve_lp(other);
      ASSERT_TRUE(o.optimal());
      ASSERT_LE(check_feasible(lp, o.values).max_residual(), 1e-7);
      EXPECT_LE(s.objective, evaluate_objective(lp, o.values) + 1e-7);
    }
  }
}

TEST(SolveLp, IterationCapReported) {
  LinearProblem lp = vpptest::random_milp(3);
  std::fill(lp.binary.begin(), lp.binary.end(), false);
  SolverOptions opt;
  opt.max_iterations = 1;
  const Solution s = solve_lp(lp, opt);
  if (s.stats.iterations > 1) FAIL() << "cap ignored";
  if (s.status != SolveStatus::Optimal) EXPECT_EQ(s.status, SolveStatus::IterationLimit);
}

TEST(SolveMilp, NoBinariesMatchesLp) {
  LinearProblem lp;
  lp.add_variable("x", 0, 4, -2);
  lp.add_variable("y", 0, 4, -3);
  lp.add_row({{0, 1}, {1, 2}}, Relation::LessEqual, 5);
  const Solution a = solve_lp(lp);
  const Solution b = solve_milp(lp);
  ASSERT_TRUE(a.optimal() && b.optimal());
  EXPECT_NEAR(a.objective, b.objective, 1e-12);
}

TEST(SolveMilp, SmallKnapsack) {
  LinearProblem lp;
  lp.add_binary("a", -5);
  lp.add_binary("b", -4);
  lp.add_row({{0, 2}, {1, 3}}, Relation::LessEqual, 4);
  const Solution s = solve_milp(lp);
  ASSERT_TRUE(s.optimal());
  EXPECT_NEAR(s.objective, -5.0, 1e-9);
  EXPECT_EQ(s.values[0], 1.0);
  EXPECT_EQ(s.values[1], 0.0);
  EXPECT_NEAR(vpptest::enumerate_binaries(lp).objective, -5.0, 1e-12);
}

TEST(SolveMilp, InfeasibleIntegerProblem) {
  LinearProblem lp;
  lp.add_binary("a");
  lp.add_binary("b");
  lp.add_row({{0, 1}, {1, 1}}, Relation::Equal, 1);
  lp.add_row({{0, 1}, {1, -1}}, Relation::Equal, 0);
  EXPECT_EQ(solve_milp(lp).status, SolveStatus::Infeasible);
}

TEST(SolveMilp, NodeLimitReportedDistinctly) {
  LinearProblem lp;
  for (int j = 0; j < 8; ++j) lp.add_binary("b" + std::to_string(j), -1.0 - 0.1 * j);
  std::vector<Term> t;
  for (std::size_t j = 0; j < 8; ++j) t.push_back({j, 2.0});
  lp.add_row(t, Relation::LessEqual, 7);  // at most 3.5 ones
  SolverOptions opt;
  opt.max_nodes = 1;
  EXPECT_EQ(solve_milp(lp, opt).status, SolveStatus::NodeLimit);
  EXPECT_EQ(solve_milp(lp).status, SolveStatus::Optimal);
}

TEST(SolveMilp, MatchesBruteForceOnSeededInstances) {
  int feasible = 0;
  for (std::uint64_t seed = 1000; seed < 1150; ++seed) {
    vpptest::RandomMilpSpec spec;
    spec.force_feasible = seed % 5 != 0;
    const LinearProblem lp = vpptest::random_milp(seed, spec);
    const auto oracle = vpptest::enumerate_binaries(lp);
    const Solution s = solve_milp(lp);
    if (!oracle.feasible) {
      EXPECT_EQ(s.status, SolveStatus::Infeasible) << "seed " << seed;
      continue;
    }
    ++feasible;
    ASSERT_EQ(s.status, SolveStatus::Optimal) << "seed " << seed;
    EXPECT_NEAR(s.objective, oracle.objective, 1e-6) << "seed " << seed;
    const auto rep = check_feasible(lp, s.values);
    EXPECT_LE(rep.max_residual(), 1e-6) << "seed " << seed;
    EXPECT_LE(rep.max_integrality, 1e-6) << "seed " << seed;
  }
  EXPECT_GE(feasible, 100);
}

TEST(SolveMilp, Deterministic) {
  const LinearProblem lp = vpptest::random_milp(77);
  const Solution a = solve_milp(lp);
  const Solution b = solve_milp(lp);
  ASSERT_EQ(a.status, b.status);
  EXPECT_EQ(a.values, b.values);
  EXPECT_EQ(a.objective, b.objective);
  EXPECT_EQ(a.stats.nodes, b.stats.nodes);
  EXPECT_EQ(a.stats.iterations, b.stats.iterations);
}

TEST(CheckFeasible, TriangleVertexHasZeroResidual) {
  LinearProblem lp;
  lp.add_variable("x", 0, kInf);
  lp.add_variable("y", 0, kInf);
  lp.add_row({{0, 1}, {1, 1}}, Relation::LessEqual, 1);
  const std::vector<double> p{1.0, 0.0};
  EXPECT_EQ(check_feasible(lp, p).max_residual(), 0.0);
}

TEST(CheckFeasible, FlagsViolatedRow) {
  LinearProblem lp;
  lp.add_variable("x", 0, 10);
  lp.add_row({{0, 1}}, Relation::GreaterEqual, 0);
  lp.add_row({{0, 1}}, Relation::LessEqual, 2);
  const std::vector<double> p{2.5};
  const auto rep = check_feasible(lp, p);
  EXPECT_DOUBLE_EQ(rep.row_violation[1], 0.5);
  EXPECT_EQ(rep.violated_rows(1e-9), std::vector<std::size_t>{1});
  EXPECT_DOUBLE_EQ(rep.max_residual(), 0.5);
}

TEST(CheckFeasible, BoundViolationAndDimensionMismatch) {
  LinearProblem lp;
  lp.add_variable("x", 0, 1);
  const std::vector<double> p{1.25};
  EXPECT_DOUBLE_EQ(check_feasible(lp, p).max_bound, 0.25);
  const std::vector<double> wrong{1.0, 2.0};
  EXPECT_THROW(check_feasible(lp, wrong), std::invalid_argument);
}

TEST(LinearProblem, ValidateRejectsBrokenInvariants) {
  LinearProblem lp;
  lp.add_variable("x", 2, 1);
  EXPECT_THROW(solve_lp(lp), std::invalid_argument);
  LinearProblem b;
  b.add_variable("z", 0, 2, 0, true);
  EXPECT_THROW(solve_milp(b), std::invalid_argument);
  LinearProblem r;
  r.add_variable("x", 0, 1);
  r.add_row({{3, 1.0}}, Relation::LessEqual, 1);
  EXPECT_THROW(r.validate(), std::invalid_argument);
}

TEST(WriteProblem, PlainTextFormat) {
  LinearProblem lp;
  lp.add_variable("x", 0, kInf, 1.5);
  lp.add_binary("u", 0.3);
  lp.add_row({{0, 1}, {1, -20}}, Relation::LessEqual, 0, "cap");
  std::ostringstream os;
  write_problem(os, lp);
  EXPECT_EQ(os.str(),
            "vpplab-lp 1\n"
            "vars 2\n"
            "v 0 x 0 inf 1.5 C\n"
            "v 1 u 0 1 0.29999999999999999 B\n"
            "rows 1\n"
            "r 0 cap le 0 2 0:1 1:-20\n");
}
