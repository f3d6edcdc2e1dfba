#pragma once

// Seeded random MILP instances and a brute-force enumeration oracle.

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <vector>

#include "vpp/milp.hpp"

namespace vpptest {

struct RandomMilpSpec {
  int max_binaries = 10;
  int max_continuous = 8;
  int max_rows = 8;
  bool force_feasible = true;
};

inline vpp::milp::LinearProblem random_milp(std::uint64_t seed, const RandomMilpSpec& spec = {}) {
  using namespace vpp::milp;
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> nb(1, spec.max_binaries);
  std::uniform_int_distribution<int> nc(0, spec.max_continuous);
  std::uniform_int_distribution<int> nr(2, spec.max_rows);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  std::uniform_int_distribution<int> coef(-6, 6);

  LinearProblem lp;
  const int b = nb(rng), c = nc(rng), m = nr(rng);
  std::vector<double> x0;
  for (int j = 0; j < b; ++j) {
    lp.add_binary("b" + std::to_string(j), std::round(u01(rng) * 20.0 - 10.0));
    x0.push_back(u01(rng) < 0.5 ? 0.0 : 1.0);
  }
  for (int j = 0; j < c; ++j) {
    const double up = 1.0 + std::floor(u01(rng) * 9.0);
    lp.add_variable("x" + std::to_string(j), 0.0, up, std::round(u01(rng) * 20.0 - 10.0));
    x0.push_back(u01(rng) * up);
  }
  const int n = b + c;
  for (int i = 0; i < m; ++i) {
    std::vector<Term> terms;
    double lhs = 0.0;
    for (int j = 0; j < n; ++j) {
      if (u01(rng) < 0.5) continue;
      const double a = coef(rng);
      if (a == 0.0) continue;
      terms.push_back({static_cast<std::size_t>(j), a});
      lhs += a * x0[j];
    }
    if (terms.empty()) continue;
    const double r = u01(rng);
    const double slack = std::floor(u01(rng) * 4.0);
    if (spec.force_feasible) {
      if (r < 0.45) {
        lp.add_row(terms, Relation::LessEqual, lhs + slack);
      } else if (r < 0.9) {
        lp.add_row(terms, Relation::GreaterEqual, lhs - slack);
      } else {
        lp.add_row(terms, Relation::Equal, lhs);
      }
    } else {
      lp.add_row(terms, r < 0.5 ? Relation::LessEqual : Relation::GreaterEqual, std::round(u01(rng) * 10.0 - 5.0));
    }
  }
  return lp;
}

struct EnumerationResult {
  bool feasible = false;
  double objective = std::numeric_limits<double>::infinity();
  std::vector<double> values;
};

/// Fixes every binary assignment, solves the remaining LP, keeps the best.
inline EnumerationResult enumerate_binaries(const vpp::milp::LinearProblem& lp) {
  using namespace vpp::milp;
  std::vector<std::size_t> bins;
  for (std::size_t j = 0; j < lp.n_vars(); ++j) {
    if (lp.binary[j]) bins.push_back(j);
  }
  EnumerationResult best;
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << bins.size()); ++mask) {
    LinearProblem fixed = lp;
    for (std::size_t k = 0; k < bins.size(); ++k) {
      const double v = (mask >> k) & 1 ? 1.0 : 0.0;
      fixed.lower[bins[k]] = fixed.upper[bins[k]] = v;
      fixed.binary[bins[k]] = false;
    }
    const Solution s = solve_lp(fixed);
    if (s.status == SolveStatus::Optimal && s.objective < best.objective) {
      best.feasible = true;
      best.objective = s.objective;
      best.values = s.values;
    }
  }
  return best;
}

}  // namespace vpptest
