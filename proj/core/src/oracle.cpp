#include "canard/oracle.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <limits>
#include <ostream>
#include <string>
#include <vector>

#include "canard/errors.hpp"

namespace canard {

namespace {

std::string fmt(double v) {
  std::array<char, 64> buf;
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  (void)ec;
  return std::string(buf.data(), end);
}

// Tracks the x range and x-maxima of a trajectory from accepted steps.
// Interior extrema come from the cubic Hermite interpolant of each step:
// its s-derivative is the quadratic A s^2 + B s + C on s in [0, 1].
struct ExtremaCollector {
  double x_min = std::numeric_limits<double>::infinity();
  double x_max = -std::numeric_limits<double>::infinity();
  std::vector<double> max_times;
  double last_x = 0, last_y = 0;

  void operator()(const StepRecord& s) {
    x_min = std::min({x_min, s.x0, s.x1});
    x_max = std::max({x_max, s.x0, s.x1});
    last_x = s.x1;
    last_y = s.y1;

    const double h = s.t1 - s.t0;
    const double A = 6 * (s.x0 - s.x1) + 3 * h * (s.fx0 + s.fx1);
    const double B = -6 * (s.x0 - s.x1) - h * (4 * s.fx0 + 2 * s.fx1);
    const double C = h * s.fx0;

    std::array<double, 2> roots;
    int n_roots = 0;
    if (std::fabs(A) <= 1e-14 * (std::fabs(B) + std::fabs(C))) {
      if (B != 0) roots[n_roots++] = -C / B;
    } else {
      const double disc = B * B - 4 * A * C;
      if (disc >= 0) {
        const double q = -0.5 * (B + std::copysign(std::sqrt(disc), B));
        roots[n_roots++] = q / A;
        if (q != 0) roots[n_roots++] = C / q;
      }
    }
    for (int i = 0; i < n_roots; ++i) {
      const double r = roots[i];
      if (!(r > 0 && r < 1)) continue;
      const double value = s.x0 + r * (C + r * (B / 2 + r * (A / 3)));
      x_min = std::min(x_min, value);
      x_max = std::max(x_max, value);
      if (2 * A * r + B < 0) max_times.push_back(s.t0 + r * h);
    }
  }
};

// Median gap between x-maxima in the second half of a pilot run, or 0 if
// fewer than four maxima landed there.
double pilot_period(const SystemDef& sys, double z, const ExplosionOptions& opts) {
  ExtremaCollector coll;
  OdeStats stats;
  integrate_raw(sys, z, opts.seed_x, opts.seed_y, 0.0, opts.pilot_time, opts.integ, stats,
                [&coll](const StepRecord& s) { coll(s); });
  std::vector<double> late;
  for (double t : coll.max_times)
    if (t >= 0.5 * opts.pilot_time) late.push_back(t);
  if (late.size() < 4) return 0;
  std::vector<double> gaps(late.size() - 1);
  for (std::size_t i = 0; i + 1 < late.size(); ++i) gaps[i] = late[i + 1] - late[i];
  std::nth_element(gaps.begin(), gaps.begin() + gaps.size() / 2, gaps.end());
  return gaps[gaps.size() / 2];
}

double amplitude_with(const SystemDef& sys, double z, double settle, double window,
                      const ExplosionOptions& opts) {
  double x = opts.seed_x, y = opts.seed_y;
  OdeStats stats;
  if (settle > 0) {
    integrate_raw(sys, z, x, y, 0.0, settle, opts.integ, stats, [&x, &y](const StepRecord& s) {
      x = s.x1;
      y = s.y1;
    });
  }
  ExtremaCollector coll;
  integrate_raw(sys, z, x, y, 0.0, window, opts.integ, stats,
                [&coll](const StepRecord& s) { coll(s); });

  const double ptp = coll.x_max - coll.x_min;
  if (ptp < 1e-6) return 0;  // point attractor
  if (coll.max_times.size() < 3)
    throw NoRecurrenceError("only " + std::to_string(coll.max_times.size()) +
                            " x-maxima in the measurement window at z=" + fmt(z));
  return ptp;
}

// Fill in settle/window from pilot periods where the caller left them 0.
ExplosionOptions resolve_times(const SystemDef& sys, const ExplosionOptions& opts, double z_lo,
                               double z_hi) {
  ExplosionOptions eff = opts;
  if (eff.settle_time > 0 && eff.window > 0) return eff;
  double period = pilot_period(sys, z_lo, opts);
  if (z_hi != z_lo) period = std::max(period, pilot_period(sys, z_hi, opts));
  if (period == 0) period = opts.pilot_time / 10;
  if (eff.settle_time <= 0) eff.settle_time = 50 * period;
  if (eff.window <= 0) eff.window = 10 * period;
  return eff;
}

}  // namespace

double limit_cycle_amplitude(const SystemDef& sys, double z, const ExplosionOptions& opts) {
  ExplosionOptions eff = resolve_times(sys, opts, z, z);
  return amplitude_with(sys, z, eff.settle_time, eff.window, eff);
}

OracleResult locate_explosion(const SystemDef& sys, double z_lo, double z_hi,
                              const ExplosionOptions& opts) {
  if (!(z_lo < z_hi))
    throw NoSignChangeError("bracket is empty: [" + fmt(z_lo) + ", " + fmt(z_hi) + "]");
  ExplosionOptions eff = resolve_times(sys, opts, z_lo, z_hi);

  OracleResult res;
  auto amp = [&sys, &eff, &res](double z) {
    double a = amplitude_with(sys, z, eff.settle_time, eff.window, eff);
    res.samples.push_back({z, a});
    return a;
  };

  const double amp_lo = amp(z_lo);
  const double amp_hi = amp(z_hi);
  res.small_amp = std::min(amp_lo, amp_hi);
  res.large_amp = std::max(amp_lo, amp_hi);
  if (res.large_amp - res.small_amp <= 1e-3 * std::max(1.0, res.large_amp))
    throw NoSignChangeError("amplitudes at the bracket endpoints do not separate: " +
                            fmt(amp_lo) + " and " + fmt(amp_hi));

  const double level = 0.5 * (amp_lo + amp_hi);
  const bool lo_is_large = amp_lo > amp_hi;
  double lo = z_lo, hi = z_hi;
  for (int i = 0; i < eff.n_bisect; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;  // bracket at rounding resolution
    const bool mid_large = amp(mid) > level;
    if (mid_large == lo_is_large)
      lo = mid;
    else
      hi = mid;
  }
  res.z_star = 0.5 * (lo + hi);
  res.bracket_lo = lo;
  res.bracket_hi = hi;
  res.width = hi - lo;
  return res;
}

void write_sweep_csv(const std::vector<AmplitudeSample>& samples, std::ostream& out) {
  std::vector<AmplitudeSample> sorted = samples;
  std::sort(sorted.begin(), sorted.end(),
            [](const AmplitudeSample& a, const AmplitudeSample& b) { return a.z < b.z; });
  out << "z,amplitude\n";
  for (const AmplitudeSample& s : sorted) out << fmt(s.z) << ',' << fmt(s.amplitude) << '\n';
}

}  // namespace canard
