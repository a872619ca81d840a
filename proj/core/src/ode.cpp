#include "canard/ode.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <limits>
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

// Dormand-Prince 5(4) tableau.
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192, a75 = -2187.0 / 6784,
                 a76 = 11.0 / 84;
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                 e6 = 22.0 / 525, e7 = -1.0 / 40;

struct Vec2 {
  double x, y;
};

}  // namespace

void integrate_raw(const SystemDef& sys, double z, double x0, double y0, double t0, double t1,
                   const IntegratorOptions& opts, OdeStats& stats,
                   const std::function<void(const StepRecord&)>& observer) {
  if (!(opts.rtol >= 1e-12 && opts.rtol <= 1e-3))
    throw OdeError("rtol must lie in [1e-12, 1e-3]");
  if (!(opts.atol > 0)) throw OdeError("atol must be positive");
  if (!(t1 > t0)) throw OdeError("integration span is empty");

  auto field = [&sys, z, &stats](double x, double y) -> Vec2 {
    ++stats.n_feval;
    return {sys.eval_F(x, y, z), sys.eval_G(x, y, z)};
  };

  const double span = t1 - t0;
  const double hmax = opts.h_max > 0 ? opts.h_max : span;

  double t = t0;
  Vec2 v{x0, y0};
  Vec2 k1 = field(v.x, v.y);
  if (!std::isfinite(k1.x) || !std::isfinite(k1.y))
    throw OdeError("non-finite field at the initial state");

  double h = opts.h_init;
  if (h <= 0) {
    // Standard two-stage starting-step estimate from the field magnitude
    // and a trial Euler step.
    double scx = opts.atol + opts.rtol * std::fabs(v.x);
    double scy = opts.atol + opts.rtol * std::fabs(v.y);
    double d0 = std::sqrt(0.5 * ((v.x / scx) * (v.x / scx) + (v.y / scy) * (v.y / scy)));
    double d1 = std::sqrt(0.5 * ((k1.x / scx) * (k1.x / scx) + (k1.y / scy) * (k1.y / scy)));
    double h0 = (d0 < 1e-10 || d1 < 1e-10) ? 1e-6 : 0.01 * d0 / d1;
    h0 = std::min(h0, hmax);
    Vec2 trial = field(v.x + h0 * k1.x, v.y + h0 * k1.y);
    double d2 = std::sqrt(0.5 * (((trial.x - k1.x) / scx) * ((trial.x - k1.x) / scx) +
                                 ((trial.y - k1.y) / scy) * ((trial.y - k1.y) / scy))) /
                h0;
    double dm = std::max(d1, d2);
    double h1 = dm <= 1e-15 ? std::max(1e-6, h0 * 1e-3) : std::pow(0.01 / dm, 0.2);
    h = std::min({100 * h0, h1, hmax});
  }
  h = std::min(h, hmax);

  // PI controller, error exponent 1/5 less a beta portion of history.
  const double beta = 0.04;
  const double expo1 = 0.2 - beta * 0.75;
  const double safe = 0.9;
  double facold = 1e-4;
  bool last_rejected = false;

  while (t < t1) {
    if (stats.n_steps + stats.n_rejected >= opts.max_steps)
      throw OdeError("step budget exhausted at t=" + fmt(t));
    if (h < 16 * std::numeric_limits<double>::epsilon() * std::max(std::fabs(t), 1.0))
      throw OdeError("step size underflow at t=" + fmt(t));
    bool last = false;
    if (t + h >= t1) {
      h = t1 - t;
      last = true;
    }

    Vec2 k2 = field(v.x + h * a21 * k1.x, v.y + h * a21 * k1.y);
    Vec2 k3 = field(v.x + h * (a31 * k1.x + a32 * k2.x), v.y + h * (a31 * k1.y + a32 * k2.y));
    Vec2 k4 = field(v.x + h * (a41 * k1.x + a42 * k2.x + a43 * k3.x),
                    v.y + h * (a41 * k1.y + a42 * k2.y + a43 * k3.y));
    Vec2 k5 = field(v.x + h * (a51 * k1.x + a52 * k2.x + a53 * k3.x + a54 * k4.x),
                    v.y + h * (a51 * k1.y + a52 * k2.y + a53 * k3.y + a54 * k4.y));
    Vec2 k6 = field(v.x + h * (a61 * k1.x + a62 * k2.x + a63 * k3.x + a64 * k4.x + a65 * k5.x),
                    v.y + h * (a61 * k1.y + a62 * k2.y + a63 * k3.y + a64 * k4.y + a65 * k5.y));
    double x1 = v.x + h * (a71 * k1.x + a73 * k3.x + a74 * k4.x + a75 * k5.x + a76 * k6.x);
    double y1 = v.y + h * (a71 * k1.y + a73 * k3.y + a74 * k4.y + a75 * k5.y + a76 * k6.y);
    Vec2 k7 = field(x1, y1);

    double errx = h * (e1 * k1.x + e3 * k3.x + e4 * k4.x + e5 * k5.x + e6 * k6.x + e7 * k7.x);
    double erry = h * (e1 * k1.y + e3 * k3.y + e4 * k4.y + e5 * k5.y + e6 * k6.y + e7 * k7.y);
    double scx = opts.atol + opts.rtol * std::max(std::fabs(v.x), std::fabs(x1));
    double scy = opts.atol + opts.rtol * std::max(std::fabs(v.y), std::fabs(y1));
    double err = std::sqrt(0.5 * ((errx / scx) * (errx / scx) + (erry / scy) * (erry / scy)));

    if (!std::isfinite(err) || !std::isfinite(x1) || !std::isfinite(y1))
      throw OdeError("non-finite state at t=" + fmt(t));

    double fac11 = std::pow(err, expo1);
    if (err <= 1.0) {
      double fac = fac11 / std::pow(facold, beta);
      fac = std::max(0.1, std::min(5.0, fac / safe));
      double hnew = h / fac;
      facold = std::max(err, 1e-4);

      StepRecord rec{t, t + h, v.x, v.y, x1, y1, k1.x, k1.y, k7.x, k7.y};
      t = last ? t1 : t + h;
      v = {x1, y1};
      k1 = k7;  // first stage of the next step
      ++stats.n_steps;
      if (observer) observer(rec);

      if (last_rejected) hnew = std::min(hnew, h);
      last_rejected = false;
      h = std::min(hnew, hmax);
    } else {
      h = h / std::min(5.0, fac11 / safe);
      ++stats.n_rejected;
      last_rejected = true;
    }
  }
}

Trajectory integrate(const SystemDef& sys, double z, double x0, double y0, double t_end,
                     const IntegratorOptions& opts) {
  Trajectory traj;
  traj.samples.push_back({0.0, x0, y0});
  integrate_raw(sys, z, x0, y0, 0.0, t_end, opts, traj.stats, [&traj](const StepRecord& s) {
    traj.samples.push_back({s.t1, s.x1, s.y1});
  });
  return traj;
}

void write_csv(const Trajectory& traj, std::ostream& out) {
  out << "t,x,y\n";
  for (const Sample& s : traj.samples)
    out << fmt(s.t) << ',' << fmt(s.x) << ',' << fmt(s.y) << '\n';
}

}  // namespace canard
