#include "canard/iteration.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <functional>
#include <iomanip>
#include <optional>
#include <ostream>
#include <string>

namespace canard {

namespace {

std::string fmt(double v) {
  std::array<char, 64> buf;
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  (void)ec;
  return std::string(buf.data(), end);
}

// Scalar solve of g(m) = 0 for the parameter increment: Newton with a
// central-difference slope, falling back to a sign-change scan plus
// bisection over [-bracket, bracket]. nullopt when neither works.
std::optional<double> solve_increment(const std::function<double(double)>& g, double z_scale,
                                      double bracket) {
  double m = 0.0;
  double gm = g(m);
  double s = std::max(1.0, std::fabs(gm));
  if (std::fabs(gm) <= 1e-15 * s) return m;

  bool newton_ok = true;
  for (int it = 0; it < 60; ++it) {
    double h = 1e-6 * std::max(1.0, std::fabs(z_scale) + std::fabs(m));
    double slope = (g(m + h) - g(m - h)) / (2 * h);
    if (!std::isfinite(slope) || slope == 0.0) {
      newton_ok = false;
      break;
    }
    double step = gm / slope;
    double m1 = m, gm1 = gm;
    bool accepted = false;
    for (int half = 0; half < 8; ++half) {
      m1 = m - step;
      gm1 = g(m1);
      if (std::isfinite(gm1) && std::fabs(gm1) < std::fabs(gm)) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      newton_ok = std::fabs(gm) <= 1e-12 * s;
      break;
    }
    m = m1;
    gm = gm1;
    if (std::fabs(gm) <= 1e-14 * s) return m;
    if (std::fabs(step) <= 1e-16 * std::max(1.0, std::fabs(m))) return m;
  }
  if (newton_ok && std::fabs(gm) <= 1e-12 * s) return m;

  // Bisection fallback on the prescribed bracket.
  const int scan = 256;
  double prev_m = -bracket, prev_g = g(prev_m);
  for (int j = 1; j <= scan; ++j) {
    double mj = -bracket + 2.0 * bracket * j / scan;
    double gj = g(mj);
    if (prev_g == 0.0) return prev_m;
    if (std::isfinite(prev_g) && std::isfinite(gj) && (prev_g < 0) != (gj < 0)) {
      double lo = prev_m, hi = mj, glo = prev_g;
      for (int it = 0; it < 120; ++it) {
        double mid = 0.5 * (lo + hi);
        double gmid = g(mid);
        if (gmid == 0.0) return mid;
        if ((glo < 0) != (gmid < 0)) {
          hi = mid;
        } else {
          lo = mid;
          glo = gmid;
        }
      }
      return 0.5 * (lo + hi);
    }
    prev_m = mj;
    prev_g = gj;
  }
  return std::nullopt;
}

}  // namespace

const char* termination_name(Termination t) {
  switch (t) {
    case Termination::tolerance_met: return "tolerance_met";
    case Termination::max_iterations: return "max_iterations";
    case Termination::diverged: return "diverged";
    case Termination::newton_failure: return "newton_failure";
  }
  return "?";
}

CanardRun iterate(const FoldData& fold, const SystemDef& sys, int max_iter, double tol) {
  const double x0 = fold.x0;

  CanardRun run;
  IntervalFunction e_t = fold.e0.deflate_root(x0);
  run.steps.push_back({fold.zeta0, fold.zeta0, fold.mu0, fold.mu0, e_t.sup_norm()});
  run.termination = Termination::max_iterations;

  IntervalFunction zsum = fold.zeta0;
  double mu_sum = fold.mu0;

  for (int n = 1; n <= max_iter; ++n) {
    auto update = [&e_t, &fold](double x) { return -e_t(x) / fold.lambda_tilde(x); };
    IntervalFunction zeta_n = IntervalFunction::build(update, fold.a, fold.b);
    IntervalFunction zsum1 = zsum + zeta_n;
    IntervalFunction dzsum1 = zsum1.derivative();

    // The parameter increment solves rho_n(x0, mu_sum + m) = 0 with the
    // graph frozen; only the parameter slot moves.
    double zs = zsum1(x0);
    double dzs = dzsum1(x0);
    auto g = [&sys, x0, zs, dzs, mu_sum](double m) {
      double mu = mu_sum + m;
      return -dzs * sys.eval_F(x0, zs, mu) + sys.eval_G(x0, zs, mu);
    };
    double prev_mu_n = run.steps.back().mu_n;
    double bracket = 10.0 * std::fabs(prev_mu_n);
    if (bracket == 0.0) bracket = 0.5 * (1.0 + std::fabs(mu_sum));
    std::optional<double> mu_n = solve_increment(g, mu_sum, bracket);
    if (!mu_n) {
      run.termination = Termination::newton_failure;
      break;
    }
    mu_sum += *mu_n;

    auto rho = [&sys, &zsum1, &dzsum1, mu_sum](double x) {
      double y = zsum1(x);
      return -dzsum1(x) * sys.eval_F(x, y, mu_sum) + sys.eval_G(x, y, mu_sum);
    };
    // rho_n is a residual of the two assembled terms, so its values head
    // toward their rounding noise as the iteration converges; the fit
    // tolerance must be absolute at the terms' own magnitude.
    BuildOptions rho_opts;
    for (int i = 0; i <= 32; ++i) {
      double x = fold.a + (fold.b - fold.a) * i / 32.0;
      double y = zsum1(x);
      double parts = std::fabs(dzsum1(x) * sys.eval_F(x, y, mu_sum)) +
                     std::fabs(sys.eval_G(x, y, mu_sum));
      rho_opts.scale = std::max(rho_opts.scale, parts);
    }
    IntervalFunction rho_fit = IntervalFunction::build(rho, fold.a, fold.b, rho_opts);
    e_t = rho_fit.deflate_root(x0);
    double delta = e_t.sup_norm();
    double prev_delta = run.steps.back().delta;

    run.steps.push_back({std::move(zeta_n), zsum1, *mu_n, mu_sum, delta});
    zsum = std::move(zsum1);

    if (delta <= tol) {
      run.termination = Termination::tolerance_met;
      break;
    }
    if (delta > prev_delta) {
      run.termination = Termination::diverged;
      break;
    }
  }

  run.best_index = 0;
  for (std::size_t i = 1; i < run.steps.size(); ++i) {
    if (run.steps[i].delta < run.steps[run.best_index].delta) run.best_index = i;
  }
  return run;
}

void write_table(const CanardRun& run, std::ostream& out) {
  out << std::setw(3) << "n" << "  " << std::setw(24) << std::left << "mu_n" << "  "
      << std::setw(24) << "mu^n" << "  " << "delta_n" << std::right << '\n';
  for (std::size_t n = 0; n < run.steps.size(); ++n) {
    const CanardStep& s = run.steps[n];
    out << std::setw(3) << n << "  " << std::setw(24) << std::left << fmt(s.mu_n) << "  "
        << std::setw(24) << fmt(s.mu_sum) << "  " << fmt(s.delta) << std::right << '\n';
  }
  out << "termination: " << termination_name(run.termination) << " (best step "
      << run.best_index << ")\n";
}

void write_csv(const CanardRun& run, std::ostream& out) {
  out << "n,mu_n,mu^n,delta_n\n";
  for (std::size_t n = 0; n < run.steps.size(); ++n) {
    const CanardStep& s = run.steps[n];
    out << n << ',' << fmt(s.mu_n) << ',' << fmt(s.mu_sum) << ',' << fmt(s.delta) << '\n';
  }
}

}  // namespace canard
