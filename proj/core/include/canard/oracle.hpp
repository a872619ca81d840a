#pragma once

#include <iosfwd>
#include <vector>

#include "canard/expr.hpp"
#include "canard/ode.hpp"

namespace canard {

struct ExplosionOptions {
  double seed_x = 0;        // initial state for every run
  double seed_y = 0;
  double settle_time = 0;   // 0: 50 pilot periods
  double window = 0;        // 0: 10 pilot periods
  double pilot_time = 2000;
  int n_bisect = 30;
  IntegratorOptions integ;
};

struct AmplitudeSample {
  double z;
  double amplitude;
};

struct OracleResult {
  double z_star = 0;
  double bracket_lo = 0, bracket_hi = 0;  // final bracket around z_star
  double width = 0;                       // bracket_hi - bracket_lo
  double small_amp = 0, large_amp = 0;    // smaller/larger endpoint amplitude
  std::vector<AmplitudeSample> samples;
};

// Peak-to-peak x amplitude of the attractor at parameter z: integrate
// past the transient, then measure over a trailing window. Returns 0
// for a point attractor. Throws NoRecurrenceError when the window holds
// fewer than three maxima, OdeError on integrator failure.
double limit_cycle_amplitude(const SystemDef& sys, double z, const ExplosionOptions& opts);

// Bisect [z_lo, z_hi] on amplitude crossing the midpoint between the
// endpoint amplitudes. Requires the endpoints to straddle that level;
// throws NoSignChangeError otherwise. Every evaluated (z, amplitude)
// pair lands in samples, in evaluation order.
OracleResult locate_explosion(const SystemDef& sys, double z_lo, double z_hi,
                              const ExplosionOptions& opts);

// CSV with the exact header "z,amplitude", rows sorted by z.
void write_sweep_csv(const std::vector<AmplitudeSample>& samples, std::ostream& out);

}  // namespace canard
