#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <vector>

#include "canard/expr.hpp"

namespace canard {

struct IntegratorOptions {
  double rtol = 1e-9;   // must stay in [1e-12, 1e-3]
  double atol = 1e-12;
  double h_init = 0;    // 0: estimated from the field
  double h_max = 0;     // 0: the full span
  std::int64_t max_steps = 50'000'000;
};

struct OdeStats {
  std::int64_t n_steps = 0;
  std::int64_t n_rejected = 0;
  std::int64_t n_feval = 0;
};

// One accepted step with the state and field at both ends; the field
// values support dense extremum queries without extra evaluations.
struct StepRecord {
  double t0, t1;
  double x0, y0;
  double x1, y1;
  double fx0, fy0;
  double fx1, fy1;
};

struct Sample {
  double t, x, y;
};

struct Trajectory {
  std::vector<Sample> samples;  // t strictly increasing
  OdeStats stats;
};

// Explicit Runge-Kutta 5(4) pair with PI step-size control, first-same-
// as-last. The observer sees every accepted step in order. Throws
// OdeError on step underflow, non-finite state, or an exhausted step
// budget.
void integrate_raw(const SystemDef& sys, double z, double x0, double y0, double t0, double t1,
                   const IntegratorOptions& opts, OdeStats& stats,
                   const std::function<void(const StepRecord&)>& observer);

// Convenience wrapper from t=0 recording one sample per accepted step.
Trajectory integrate(const SystemDef& sys, double z, double x0, double y0, double t_end,
                     const IntegratorOptions& opts = {});

// CSV with the exact header "t,x,y".
void write_csv(const Trajectory& traj, std::ostream& out);

}  // namespace canard
