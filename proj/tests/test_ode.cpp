#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"

#include "canard/errors.hpp"
#include "canard/expr.hpp"
#include "canard/ode.hpp"

using namespace canard;

namespace {

// unit circle clockwise from (1,0): x = cos t, y = -sin t
SystemDef rotation() { return SystemDef::make("y", "-x", {}); }

const double kTwoPi = 6.283185307179586476925286766559;

}  // namespace

TEST_CASE("rotation returns to the start") {
  IntegratorOptions opts;
  opts.rtol = 1e-9;
  opts.atol = 1e-12;
  Trajectory traj = integrate(rotation(), 0.0, 1.0, 0.0, kTwoPi, opts);
  REQUIRE(!traj.samples.empty());
  CHECK(traj.samples.front().t == 0.0);
  CHECK(traj.samples.front().x == 1.0);
  CHECK(traj.samples.back().t == kTwoPi);  // the last step lands exactly
  CHECK(traj.samples.back().x == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(std::fabs(traj.samples.back().y) <= 1e-6);
  CHECK(traj.stats.n_steps > 10);
  CHECK(traj.stats.n_feval >= 6 * traj.stats.n_steps);
  for (std::size_t i = 1; i < traj.samples.size(); ++i)
    CHECK(traj.samples[i].t > traj.samples[i - 1].t);
}

TEST_CASE("energy drift over ten periods") {
  IntegratorOptions opts;
  opts.rtol = 1e-9;
  opts.atol = 1e-12;
  Trajectory traj = integrate(rotation(), 0.0, 1.0, 0.0, 10 * kTwoPi, opts);
  double worst = 0;
  for (const Sample& s : traj.samples)
    worst = std::max(worst, std::fabs(s.x * s.x + s.y * s.y - 1.0));
  CHECK(worst <= 1e-6);
}

// tighten rtol decade by decade; the endpoint error against cos must fall
// like the 5th power of the mean step
TEST_CASE("observed order of the pair") {
  std::vector<double> log_h, log_err;
  for (double rtol : {1e-4, 1e-5, 1e-6, 1e-7, 1e-8}) {
    IntegratorOptions opts;
    opts.rtol = rtol;
    opts.atol = 1e-14;
    OdeStats stats;
    double xe = 0, ye = 0;
    integrate_raw(rotation(), 0.0, 1.0, 0.0, 0.0, kTwoPi, opts, stats,
                  [&](const StepRecord& s) {
                    xe = s.x1;
                    ye = s.y1;
                  });
    double err = std::hypot(xe - 1.0, ye - 0.0);
    REQUIRE(err > 0);
    log_h.push_back(std::log(kTwoPi / static_cast<double>(stats.n_steps)));
    log_err.push_back(std::log(err));
  }
  // least-squares slope of log err against log h
  double n = static_cast<double>(log_h.size());
  double sh = 0, se = 0, shh = 0, she = 0;
  for (std::size_t i = 0; i < log_h.size(); ++i) {
    sh += log_h[i];
    se += log_err[i];
    shh += log_h[i] * log_h[i];
    she += log_h[i] * log_err[i];
  }
  double slope = (n * she - sh * se) / (n * shh - sh * sh);
  CAPTURE(slope);
  CHECK(slope >= 4.5);
}

TEST_CASE("step size cap is respected") {
  IntegratorOptions opts;
  opts.h_max = 0.01;
  OdeStats stats;
  double longest = 0;
  integrate_raw(rotation(), 0.0, 1.0, 0.0, 0.0, 2.0, opts, stats, [&](const StepRecord& s) {
    longest = std::max(longest, s.t1 - s.t0);
  });
  CHECK(longest <= 0.01 * (1 + 1e-12));
}

TEST_CASE("option validation") {
  SystemDef sys = rotation();
  IntegratorOptions opts;
  OdeStats stats;
  auto run = [&](const IntegratorOptions& o) {
    integrate_raw(sys, 0.0, 1.0, 0.0, 0.0, 1.0, o, stats, {});
  };
  opts.rtol = 0.5;
  CHECK_THROWS_AS(run(opts), OdeError);
  opts.rtol = 1e-13;
  CHECK_THROWS_AS(run(opts), OdeError);
  opts = {};
  opts.atol = 0;
  CHECK_THROWS_AS(run(opts), OdeError);
  opts = {};
  CHECK_THROWS_AS(integrate_raw(sys, 0.0, 1.0, 0.0, 1.0, 1.0, opts, stats, {}), OdeError);
}

TEST_CASE("step budget exhaustion") {
  IntegratorOptions opts;
  opts.max_steps = 10;
  OdeStats stats;
  CHECK_THROWS_AS(
      integrate_raw(rotation(), 0.0, 1.0, 0.0, 0.0, 1000.0, opts, stats, {}), OdeError);
}

// x' = x^2 from x(0) = 10 blows up at t = 0.1; the step size underflows or
// the state leaves the representable range before then
TEST_CASE("finite time blowup is reported") {
  SystemDef sys = SystemDef::make("x^2", "0", {});
  IntegratorOptions opts;
  OdeStats stats;
  CHECK_THROWS_AS(integrate_raw(sys, 0.0, 10.0, 0.0, 0.0, 1.0, opts, stats, {}), OdeError);
}

TEST_CASE("csv output") {
  IntegratorOptions opts;
  opts.rtol = 1e-6;
  opts.atol = 1e-9;
  Trajectory traj = integrate(rotation(), 0.0, 1.0, 0.0, 1.0, opts);
  std::ostringstream out;
  write_csv(traj, out);
  std::string header = out.str().substr(0, out.str().find('\n'));
  CHECK(header == "t,x,y");
  std::ostringstream out2;
  write_csv(traj, out2);
  CHECK(out.str() == out2.str());
}

TEST_CASE("integration is deterministic") {
  IntegratorOptions opts;
  Trajectory a = integrate(rotation(), 0.0, 1.0, 0.0, 25.0, opts);
  Trajectory b = integrate(rotation(), 0.0, 1.0, 0.0, 25.0, opts);
  REQUIRE(a.samples.size() == b.samples.size());
  for (std::size_t i = 0; i < a.samples.size(); ++i) {
    CHECK(a.samples[i].t == b.samples[i].t);
    CHECK(a.samples[i].x == b.samples[i].x);
    CHECK(a.samples[i].y == b.samples[i].y);
  }
  CHECK(a.stats.n_feval == b.stats.n_feval);
}

// the slow-fast field this was built for: one relaxation excursion of the
// van der Pol system reaches both fast branches
TEST_CASE("relaxation excursion stays finite and recurrent") {
  SystemDef sys = SystemDef::make("(y - x^3/3 + x)/eps", "z - x", {{"eps", 0.05}});
  IntegratorOptions opts;
  opts.rtol = 1e-8;
  opts.atol = 1e-10;
  Trajectory traj = integrate(sys, 0.9, 2.0, 0.0, 40.0, opts);
  double xmin = 1e300, xmax = -1e300;
  for (const Sample& s : traj.samples) {
    xmin = std::min(xmin, s.x);
    xmax = std::max(xmax, s.x);
  }
  CHECK(xmax > 1.5);
  CHECK(xmin < -1.5);
  CHECK(xmax < 3.0);
  CHECK(xmin > -3.0);
}
