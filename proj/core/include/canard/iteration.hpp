#pragma once

#include <cstddef>
#include <iosfwd>
#include <vector>

#include "canard/expr.hpp"
#include "canard/fold.hpp"
#include "canard/interval_function.hpp"

namespace canard {

enum class Termination { tolerance_met, max_iterations, diverged, newton_failure };

// One refinement step. Step 0 is the starting state: zeta_n and zeta_sum
// are both the critical manifold, mu_n and mu_sum the fold parameter, and
// delta the starting defect norm sup|e0_tilde|.
struct CanardStep {
  IntervalFunction zeta_n;    // the increment
  IntervalFunction zeta_sum;  // partial sum up to this step
  double mu_n;
  double mu_sum;
  double delta;               // sup |e_n tilde|
};

// mu_sum at step n is exactly the running sum of mu_n; delta is recorded
// for every step; on termination == diverged the final delta exceeds the
// one before it and best_index points at the smallest delta seen.
struct CanardRun {
  std::vector<CanardStep> steps;
  Termination termination;
  std::size_t best_index;
};

const char* termination_name(Termination t);

// The refinement loop. Per step n >= 1:
//   (i)   zeta_n = -e_{n-1} tilde / lambda_tilde (pointwise + fit),
//         added into the running graph;
//   (ii)  mu_n from rho_n(x0, mu_sum + mu_n) = 0 by safeguarded Newton
//         (central-difference slope, bisection fallback on the bracket
//         +-10 |previous mu_n|), where
//         rho_n(x, m) = -zeta_sum'(x) F(x, zeta_sum(x), m) + G(..., m);
//   (iii) e_n tilde = rho_n(., mu_sum)/(x - x0) by deflation, and the
//         defect norm delta_n = sup|e_n tilde|.
// Stops on delta_n <= tol, n == max_iter, or delta_n > delta_{n-1}
// (diverged: the last good step stays at best_index). A failed mu_n
// solve ends the run with termination == newton_failure.
CanardRun iterate(const FoldData& fold, const SystemDef& sys, int max_iter = 8,
                  double tol = 1e-12);

// Plain-text iteration table, columns n, mu_n, mu^n, delta_n.
void write_table(const CanardRun& run, std::ostream& out);

// Same rows as CSV with the exact header "n,mu_n,mu^n,delta_n".
void write_csv(const CanardRun& run, std::ostream& out);

}  // namespace canard
