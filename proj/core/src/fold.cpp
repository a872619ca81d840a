#include "canard/fold.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <limits>
#include <string>

namespace canard {

namespace {

std::string fmt(double v) {
  std::array<char, 64> buf;
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  (void)ec;
  return std::string(buf.data(), end);
}

}  // namespace

double solve_manifold_point(const SystemDef& sys, double x, double z, double y_seed) {
  double y = y_seed;
  double f = sys.eval_F(x, y, z);
  for (int it = 0; it < 60; ++it) {
    double dy = sys.grad_F(x, y, z).dy;
    double scale = std::max(1.0, std::fabs(dy) * std::max(1.0, std::fabs(y)));
    if (std::fabs(f) <= 1e-13 * scale) return y;
    if (std::fabs(dy) < 1e-12 * (1.0 + std::fabs(f)))
      throw BranchLostError("dF/dy vanishes at x=" + fmt(x) + " (manifold fold or wrong branch)");
    double step = f / dy;
    // Backtrack until |F| actually drops; a stall here means the seed is
    // on the wrong side of a fold.
    double y1 = y, f1 = f;
    bool accepted = false;
    for (int half = 0; half < 40; ++half) {
      y1 = y - step;
      f1 = sys.eval_F(x, y1, z);
      if (std::isfinite(f1) && std::fabs(f1) < std::fabs(f)) {
        accepted = true;
        break;
      }
      step *= 0.5;
      if (std::fabs(step) <= 1e-17 * std::max(1.0, std::fabs(y))) break;
    }
    if (!accepted) {
      if (std::fabs(f) <= 1e-10 * scale) return y;  // machine-precision stall
      throw BranchLostError("manifold solve stalled at x=" + fmt(x));
    }
    y = y1;
    f = f1;
  }
  throw BranchLostError("manifold solve did not converge at x=" + fmt(x));
}

IntervalFunction critical_manifold(const SystemDef& sys, double z, double a, double b,
                                   double y_seed, const BuildOptions& opts) {
  // The builder sweeps each refinement level in ascending x, so the
  // previous solution is a valid warm start except when a new level
  // restarts at a; then the stored left-endpoint value takes over.
  struct State {
    double last_x, last_y, left_y;
    bool have_left = false;
  };
  State st{0, y_seed, y_seed, false};
  auto eval = [&sys, z, &st](double x) {
    double seed = !st.have_left ? st.left_y : (x <= st.last_x ? st.left_y : st.last_y);
    double y = solve_manifold_point(sys, x, z, seed);
    if (!st.have_left) {
      st.left_y = y;
      st.have_left = true;
    }
    st.last_x = x;
    st.last_y = y;
    return y;
  };
  return IntervalFunction::build(eval, a, b, opts);
}

namespace {

// Pointwise lambda via the implicit-function slope; shared by the fold
// Newton (no global manifold there) and the fitted lambda_fn.
double lambda_at(const SystemDef& sys, double x, double y, double z) {
  GradResult gf = sys.grad_F(x, y, z);
  GradResult gg = sys.grad_G(x, y, z);
  double slope = -gf.dx / gf.dy;
  return -slope * gf.dy + gg.dy;
}

}  // namespace

IntervalFunction lambda_fn(const SystemDef& sys, double z, const IntervalFunction& zeta0) {
  IntervalFunction dz = zeta0.derivative();
  auto eval = [&sys, z, &zeta0, &dz](double x) {
    double y = zeta0(x);
    return -dz(x) * sys.grad_F(x, y, z).dy + sys.grad_G(x, y, z).dy;
  };
  return IntervalFunction::build(eval, zeta0.lo(), zeta0.hi());
}

IntervalFunction phi_fn(const SystemDef& sys, double z, const IntervalFunction& zeta0) {
  IntervalFunction dz = zeta0.derivative();
  auto eval = [&sys, z, &zeta0, &dz](double x) {
    double y = zeta0(x);
    return -dz(x) * sys.grad_F(x, y, z).dz + sys.grad_G(x, y, z).dz;
  };
  return IntervalFunction::build(eval, zeta0.lo(), zeta0.hi());
}

IntervalFunction e0_fn(const SystemDef& sys, double z, const IntervalFunction& zeta0) {
  auto eval = [&sys, z, &zeta0](double x) { return sys.eval_G(x, zeta0(x), z); };
  return IntervalFunction::build(eval, zeta0.lo(), zeta0.hi());
}

namespace {

struct FoldPoint {
  double x, z, y;
};

// Residual of the fold conditions at (x, z): lambda and G on the manifold.
// y_warm carries the manifold branch between calls.
std::array<double, 2> fold_residual(const SystemDef& sys, double x, double z, double& y_warm) {
  y_warm = solve_manifold_point(sys, x, z, y_warm);
  return {lambda_at(sys, x, y_warm, z), sys.eval_G(x, y_warm, z)};
}

double fold_norm(const std::array<double, 2>& r) {
  return std::max(std::fabs(r[0]), std::fabs(r[1]));
}

FoldPoint newton_fold_point(const SystemDef& sys, double x_guess, double z_guess, double y_seed) {
  double x = x_guess, z = z_guess;
  double y = solve_manifold_point(sys, x, z, y_seed);
  std::array<double, 2> r = fold_residual(sys, x, z, y);
  double r0 = std::max(1.0, fold_norm(r));

  for (int it = 0; it < 50; ++it) {
    if (fold_norm(r) <= 1e-13 * r0) return {x, z, y};

    double hx = 1e-6 * std::max(1.0, std::fabs(x));
    double hz = 1e-6 * std::max(1.0, std::fabs(z));
    double yw = y;
    std::array<double, 2> rxp = fold_residual(sys, x + hx, z, yw);
    yw = y;
    std::array<double, 2> rxm = fold_residual(sys, x - hx, z, yw);
    yw = y;
    std::array<double, 2> rzp = fold_residual(sys, x, z + hz, yw);
    yw = y;
    std::array<double, 2> rzm = fold_residual(sys, x, z - hz, yw);

    double j00 = (rxp[0] - rxm[0]) / (2 * hx), j01 = (rzp[0] - rzm[0]) / (2 * hz);
    double j10 = (rxp[1] - rxm[1]) / (2 * hx), j11 = (rzp[1] - rzm[1]) / (2 * hz);
    double det = j00 * j11 - j01 * j10;
    double jscale = std::max({std::fabs(j00) * std::fabs(j11), std::fabs(j01) * std::fabs(j10), 1e-300});
    if (std::fabs(det) <= 1e-14 * jscale)
      throw NewtonError("singular Jacobian in the fold solve at x=" + fmt(x) + ", z=" + fmt(z));

    double dx = (-r[0] * j11 + r[1] * j01) / det;
    double dz = (-j00 * r[1] + j10 * r[0]) / det;

    if (std::max(std::fabs(dx), std::fabs(dz)) <=
        1e-14 * (1.0 + std::fabs(x) + std::fabs(z)))
      return {x, z, y};

    bool accepted = false;
    double alpha = 1.0;
    for (int half = 0; half < 8; ++half) {
      double x1 = x + alpha * dx, z1 = z + alpha * dz;
      double y1 = y;
      try {
        std::array<double, 2> r1 = fold_residual(sys, x1, z1, y1);
        if (fold_norm(r1) < fold_norm(r)) {
          x = x1;
          z = z1;
          y = y1;
          r = r1;
          accepted = true;
          break;
        }
      } catch (const BranchLostError&) {
        // step left the branch; shorten it
      }
      alpha *= 0.5;
    }
    if (!accepted) {
      if (fold_norm(r) <= 1e-9 * r0) return {x, z, y};
      throw NewtonError("fold solve stalled at x=" + fmt(x) + ", z=" + fmt(z));
    }
  }
  throw NewtonError("fold solve did not converge in 50 steps");
}

// Continues the manifold from (x_from, y_from) to x_to in short steps and
// returns y there: produces the left-endpoint seed for the global fit.
double continue_to(const SystemDef& sys, double z, double x_from, double y_from, double x_to) {
  double y = y_from;
  const int n = 64;
  for (int i = 1; i <= n; ++i) {
    double x = x_from + (x_to - x_from) * i / n;
    y = solve_manifold_point(sys, x, z, y);
  }
  return y;
}

struct FittedFold {
  IntervalFunction zeta0, lambda, lambda_tilde;
};

FittedFold fit_on(const SystemDef& sys, const FoldPoint& p, double a, double b) {
  double y_left = continue_to(sys, p.z, p.x, p.y, a);
  IntervalFunction zeta0 = critical_manifold(sys, p.z, a, b, y_left);
  IntervalFunction lambda = lambda_fn(sys, p.z, zeta0);
  IntervalFunction lt = lambda.deflate_root(p.x);
  return {std::move(zeta0), std::move(lambda), std::move(lt)};
}

}  // namespace

FoldData find_fold(const SystemDef& sys, double x_guess, double z_guess,
                   const DomainSpec& domain, double y_seed) {
  FoldPoint p = newton_fold_point(sys, x_guess, z_guess, y_seed);

  double a, b;
  FittedFold fit = [&]() -> FittedFold {
    if (domain.mode == DomainSpec::Mode::fixed) {
      a = domain.a;
      b = domain.b;
      if (!(a < p.x && p.x < b))
        throw IntervalError("fold x0=" + fmt(p.x) + " outside the fixed domain [" + fmt(a) +
                            ", " + fmt(b) + "]");
      FittedFold f = fit_on(sys, p, a, b);
      if (!f.lambda_tilde.roots().empty())
        throw IntervalError("deflated lambda vanishes inside [" + fmt(a) + ", " + fmt(b) +
                            "]; shrink the domain");
      return f;
    }
    double r = domain.auto_radius;
    for (int attempt = 0; attempt < 60; ++attempt) {
      a = p.x - r;
      b = p.x + r;
      try {
        FittedFold f = fit_on(sys, p, a, b);
        std::vector<double> zeros = f.lambda_tilde.roots();
        if (!zeros.empty()) {
          double d = r;
          for (double zx : zeros) d = std::min(d, std::fabs(zx - p.x));
          r = 0.8 * d;
          continue;
        }
        return f;
      } catch (const Error&) {
        r *= 0.7;  // singularity or lost branch inside; tighten
      }
    }
    throw NewtonError("no usable domain around the fold at x0=" + fmt(p.x));
  }();

  // The fold conditions transfer from the pointwise solve to the fit.
  double lam_sup = fit.lambda.sup_norm();
  if (std::fabs(fit.lambda(p.x)) > 1e-8 * std::max(1.0, lam_sup))
    throw NewtonError("fitted lambda does not vanish at x0 (fit inconsistent with solve)");

  IntervalFunction phi = phi_fn(sys, p.z, fit.zeta0);
  IntervalFunction e0 = e0_fn(sys, p.z, fit.zeta0);
  if (std::fabs(e0(p.x)) > 1e-8 * std::max(1.0, e0.sup_norm()))
    throw NewtonError("fitted e0 does not vanish at x0 (fit inconsistent with solve)");

  return FoldData{p.x,
                  p.z,
                  a,
                  b,
                  std::move(fit.zeta0),
                  std::move(fit.lambda),
                  std::move(fit.lambda_tilde),
                  std::move(phi),
                  std::move(e0)};
}

Diagnostics check_assumptions(const FoldData& fold, const SystemDef& sys) {
  IntervalFunction e0t = fold.e0.deflate_root(fold.x0);

  double delta0 = e0t.sup_norm();
  double min_lt = fold.lambda_tilde.min_abs();
  double K = min_lt > 0 ? 1.0 / min_lt : std::numeric_limits<double>::infinity();
  double lamt0 = fold.lambda_tilde(fold.x0);
  double e0t0 = e0t(fold.x0);
  double ratio = e0t0 / lamt0;

  double phi0 = fold.phi(fold.x0);
  double phi_sup = fold.phi.sup_norm();

  // Remainder proxies: |dyF| and |dzF| over a band around the manifold.
  double band = 0.25 * (1.0 + fold.zeta0.sup_norm());
  double dyF_sup = 0, dzF_sup = 0;
  const int nx = 25, ny = 25;
  for (int i = 0; i < nx; ++i) {
    double x = fold.a + (fold.b - fold.a) * i / (nx - 1);
    double yc = fold.zeta0(x);
    for (int j = 0; j < ny; ++j) {
      double y = yc - band + 2.0 * band * j / (ny - 1);
      GradResult gf = sys.grad_F(x, y, fold.mu0);
      dyF_sup = std::max(dyF_sup, std::fabs(gf.dy));
      dzF_sup = std::max(dzF_sup, std::fabs(gf.dz));
    }
  }

  // Case (b) wants phi uniformly small: against the contraction budget K
  // and against the run's own scale (the ratio is the epsilon proxy).
  // Case (a) just needs a small confidence ratio. Thresholds are
  // reported, never enforced.
  CaseLabel label = CaseLabel::inconclusive;
  if (phi_sup * K <= 0.05 && phi_sup <= 10.0 * std::fabs(ratio)) {
    label = CaseLabel::b;
  } else if (std::fabs(ratio) < 0.1) {
    label = CaseLabel::a;
  }

  return Diagnostics{delta0, K,    ratio,   e0t0,    lamt0,
                     phi0,   phi_sup, dyF_sup, dzF_sup, label};
}

}  // namespace canard
