#pragma once

#include "canard/expr.hpp"
#include "canard/interval_function.hpp"

namespace canard {

// Where the x interval around the fold comes from. In automatic mode the
// radius starts at auto_radius and shrinks until the manifold builds, then
// adapts to 0.8x the distance from x0 to the nearest zero of the deflated
// eigenvalue function, so the deflation stays invertible on [a,b].
struct DomainSpec {
  enum class Mode { automatic, fixed };
  Mode mode = Mode::automatic;
  double a = 0;
  double b = 0;
  double auto_radius = 1.0;

  static DomainSpec fixed_interval(double a, double b) {
    DomainSpec d;
    d.mode = Mode::fixed;
    d.a = a;
    d.b = b;
    return d;
  }
  static DomainSpec automatic(double radius = 1.0) {
    DomainSpec d;
    d.auto_radius = radius;
    return d;
  }
};

// Output of the fold solve: the parameter/position pair satisfying
// lambda(x0) = 0 and G(x0, zeta0(x0), mu0) = 0, plus the fitted functions
// on the final domain [a,b]. lambda_tilde = lambda/(x-x0) has no zero in
// [a,b]; e0 is G along the manifold at z = mu0.
struct FoldData {
  double x0;
  double mu0;
  double a;
  double b;
  IntervalFunction zeta0;
  IntervalFunction lambda;
  IntervalFunction lambda_tilde;
  IntervalFunction phi;
  IntervalFunction e0;
};

enum class CaseLabel { a, b, inconclusive };

// Non-degeneracy and smallness report for a located fold. ratio is the
// headline confidence number e0_tilde(x0)/lambda_tilde(x0); dyF_sup and
// dzF_sup are sampled over [a,b] x [zeta0 +- Delta] as remainder proxies.
struct Diagnostics {
  double delta0;       // sup |e0_tilde|
  double K;            // sup |1/lambda_tilde|
  double ratio;
  double e0t_at_x0;
  double lamt_at_x0;
  double phi_at_fold;
  double phi_sup;
  double dyF_sup;
  double dzF_sup;
  CaseLabel case_label;
};

// Solves F(x, y, z) = 0 for y by damped Newton from y_seed. Throws
// BranchLostError when dF/dy vanishes or the iteration fails, which is
// the signal that the manifold folds in x here or the seed picked the
// wrong branch.
double solve_manifold_point(const SystemDef& sys, double x, double z, double y_seed);

// The graph y = zeta0(x) of F = 0 at fixed z, by Newton continuation
// across the fit nodes (each solve warm-started from its neighbor).
// y_seed must be close to the intended branch at x = a.
IntervalFunction critical_manifold(const SystemDef& sys, double z, double a, double b,
                                   double y_seed, const BuildOptions& opts = {});

// lambda(x) = -zeta0'(x) dyF(x, zeta0(x), z) + dyG(x, zeta0(x), z):
// the nonzero eigenvalue of the layer Jacobian along the manifold.
IntervalFunction lambda_fn(const SystemDef& sys, double z, const IntervalFunction& zeta0);

// phi(x) = -zeta0'(x) dzF(x, zeta0(x), z) + dzG(x, zeta0(x), z).
IntervalFunction phi_fn(const SystemDef& sys, double z, const IntervalFunction& zeta0);

// e0(x) = G(x, zeta0(x), z): the invariance defect of the manifold.
IntervalFunction e0_fn(const SystemDef& sys, double z, const IntervalFunction& zeta0);

// Damped two-variable Newton for (x0, mu0) from the given guesses, then
// the full fitted FoldData on the resolved domain. The manifold value
// inside the Newton loop is a pointwise solve (warm-started), its slope
// the implicit-function formula -dxF/dyF; the Jacobian central finite
// differences with relative step 1e-6. Throws NewtonError (no convergence
// in 50 steps, stall), BranchLostError (dF/dy ~ 0 at an iterate), or
// IntervalError (fixed domain where the deflated lambda still vanishes).
FoldData find_fold(const SystemDef& sys, double x_guess, double z_guess,
                   const DomainSpec& domain, double y_seed);

// Diagnostics for the located fold; never throws on suspicious values,
// it only classifies (case b needs phi uniformly small against both the
// contraction budget and the system's own scale, case a a small ratio).
Diagnostics check_assumptions(const FoldData& fold, const SystemDef& sys);

}  // namespace canard
