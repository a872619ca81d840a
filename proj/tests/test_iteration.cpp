#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"

#include "canard/expr.hpp"
#include "canard/fold.hpp"
#include "canard/iteration.hpp"

using namespace canard;

namespace {

SystemDef vdp(double eps, const std::string& g_text = "eps*(z - x)") {
  return SystemDef::make("y - x^3/3 + x", g_text, {{"eps", eps}});
}

FoldData vdp_fold(const SystemDef& sys, double z_guess = 0.9) {
  return find_fold(sys, 0.9, z_guess, DomainSpec::fixed_interval(0.2, 1.8), -0.657);
}

// rho_n(x, m) assembled from the stored partial sum
double rho_at(const CanardRun& run, std::size_t n, const SystemDef& sys, double x, double m) {
  const IntervalFunction& zs = run.steps[n].zeta_sum;
  double y = zs(x);
  return -zs.derivative()(x) * sys.eval_F(x, y, m) + sys.eval_G(x, y, m);
}

}  // namespace

// the first correction of the classical canard expansion is -eps/8
TEST_CASE("first parameter correction, three time-scale ratios") {
  for (double eps : {0.02, 0.05, 0.1}) {
    SystemDef sys = vdp(eps);
    CanardRun run = iterate(vdp_fold(sys), sys, 1);
    REQUIRE(run.steps.size() == 2);
    CAPTURE(eps);
    CHECK(run.steps[1].mu_sum == doctest::Approx(1.0 - eps / 8).epsilon(1e-8));
    CHECK(run.steps[0].mu_sum == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(run.steps[0].delta == doctest::Approx(eps).epsilon(1e-9));
  }
}

// defect norms contract like C*eps per step with one C for all three eps
TEST_CASE("defect decay is first order in eps") {
  double c_needed = 0;
  for (double eps : {0.02, 0.05, 0.1}) {
    SystemDef sys = vdp(eps);
    CanardRun run = iterate(vdp_fold(sys), sys, 3);
    REQUIRE(run.steps.size() == 4);
    for (int n = 0; n < 3; ++n) {
      double ratio = run.steps[n + 1].delta / run.steps[n].delta;
      CAPTURE(eps);
      CAPTURE(n);
      CHECK(ratio <= 10 * eps);
      c_needed = std::max(c_needed, ratio / eps);
    }
  }
  CHECK(c_needed <= 10.0);
}

TEST_CASE("mu_sum is the exact running sum") {
  SystemDef sys = vdp(0.05);
  CanardRun run = iterate(vdp_fold(sys), sys, 5);
  double acc = 0;
  for (const CanardStep& s : run.steps) {
    acc += s.mu_n;
    CHECK(s.mu_sum == acc);  // same additions, bitwise
  }
}

// replacing z by z + c shifts every mu_n total by -c and nothing else
TEST_CASE("parameter shift covariance") {
  const double c = 0.33;
  SystemDef base = vdp(0.05);
  SystemDef shifted = vdp(0.05, "eps*((z + 0.33) - x)");
  CanardRun rb = iterate(vdp_fold(base), base, 3);
  CanardRun rs = iterate(vdp_fold(shifted, 0.9 - c), shifted, 3);
  REQUIRE(rb.steps.size() == rs.steps.size());
  for (std::size_t n = 0; n < rb.steps.size(); ++n) {
    CAPTURE(n);
    CHECK(std::fabs(rs.steps[n].mu_sum - (rb.steps[n].mu_sum - c)) <= 1e-10);
    CHECK(std::fabs(rs.steps[n].delta - rb.steps[n].delta) <= 1e-10);
    for (int i = 0; i <= 32; ++i) {
      double x = 0.2 + 1.6 * i / 32;
      CHECK(std::fabs(rs.steps[n].zeta_sum(x) - rb.steps[n].zeta_sum(x)) <= 1e-10);
    }
  }
}

// each accepted mu_n solves its own defect equation at the fold
TEST_CASE("per step parameter exactness") {
  SystemDef sys = vdp(0.05);
  FoldData fold = vdp_fold(sys);
  CanardRun run = iterate(fold, sys, 4);
  for (std::size_t n = 1; n < run.steps.size(); ++n) {
    CAPTURE(n);
    CHECK(std::fabs(rho_at(run, n, sys, fold.x0, run.steps[n].mu_sum)) <= 1e-9);
  }
}

// the stored increment is -e_{n-1} tilde / lambda_tilde, and e tilde is the
// deflation of the previous defect: undoing both must reproduce rho_{n-1}
TEST_CASE("update and deflation consistency") {
  SystemDef sys = vdp(0.05);
  FoldData fold = vdp_fold(sys);
  CanardRun run = iterate(fold, sys, 2);
  REQUIRE(run.steps.size() == 3);
  for (std::size_t n = 1; n <= 2; ++n) {
    double mu_prev = run.steps[n - 1].mu_sum;
    double rho0 = rho_at(run, n - 1, sys, fold.x0, mu_prev);
    double sup = 0;
    for (int i = 0; i <= 200; ++i) {
      double x = 0.2 + 1.6 * i / 200;
      sup = std::max(sup, std::fabs(rho_at(run, n - 1, sys, x, mu_prev)));
    }
    double worst = 0;
    for (int i = 0; i <= 200; ++i) {
      double x = 0.2 + 1.6 * i / 200;
      double e_tilde = -fold.lambda_tilde(x) * run.steps[n].zeta_n(x);
      double lhs = (x - fold.x0) * e_tilde + rho0;
      worst = std::max(worst, std::fabs(lhs - rho_at(run, n - 1, sys, x, mu_prev)));
    }
    CAPTURE(n);
    CHECK(worst <= 1e-9 * sup);
  }
}

TEST_CASE("termination: tolerance met") {
  SystemDef sys = vdp(0.05);
  CanardRun run = iterate(vdp_fold(sys), sys, 8, 1e-4);
  CHECK(run.termination == Termination::tolerance_met);
  CHECK(run.steps.back().delta <= 1e-4);
  CHECK(run.best_index == run.steps.size() - 1);
  CHECK(run.steps.size() < 9);  // stopped before the iteration cap
}

TEST_CASE("termination: max iterations") {
  SystemDef sys = vdp(0.05);
  CanardRun run = iterate(vdp_fold(sys), sys, 2, 1e-12);
  CHECK(run.termination == Termination::max_iterations);
  CHECK(run.steps.size() == 3);
}

// far from the singular limit the correction series has nothing to offer;
// the defect grows and the run reports the last good step
TEST_CASE("termination: diverged") {
  SystemDef sys = vdp(2.0);
  CanardRun run = iterate(vdp_fold(sys), sys, 8);
  REQUIRE(run.termination == Termination::diverged);
  REQUIRE(run.steps.size() >= 2);
  std::size_t last = run.steps.size() - 1;
  CHECK(run.steps[last].delta > run.steps[last - 1].delta);
  for (std::size_t n = 0; n < run.steps.size(); ++n)
    CHECK(run.steps[run.best_index].delta <= run.steps[n].delta);
}

// G depends on z only through z^2 + 0.9995 with the fold parameter near
// zero, so the step-1 defect equation g(m) = c + eps ((mu0+m)^2 - 0.0005)
// with c > eps*0.0005 has no real root: the parameter solve must give up
TEST_CASE("termination: parameter solve failure") {
  SystemDef sys = SystemDef::make("y - x^3/3 + x", "eps*(z^2 + 0.9995 - x)", {{"eps", 0.05}});
  FoldData fold = find_fold(sys, 0.9, 0.02, DomainSpec::fixed_interval(0.2, 1.8), -0.657);
  CHECK(fold.mu0 == doctest::Approx(std::sqrt(0.0005)).epsilon(1e-9));
  CanardRun run = iterate(fold, sys, 4);
  CHECK(run.termination == Termination::newton_failure);
  CHECK(run.steps.size() == 1);  // step 0 stays reportable
  CHECK(run.best_index == 0);
}

TEST_CASE("table and csv output") {
  SystemDef sys = vdp(0.05);
  CanardRun run = iterate(vdp_fold(sys), sys, 2);

  std::ostringstream csv;
  write_csv(run, csv);
  std::istringstream in(csv.str());
  std::string line;
  std::getline(in, line);
  CHECK(line == "n,mu_n,mu^n,delta_n");
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  CHECK(rows == 3);

  std::ostringstream csv2;
  write_csv(run, csv2);
  CHECK(csv.str() == csv2.str());

  std::ostringstream table;
  write_table(run, table);
  CHECK(table.str().find("mu^n") != std::string::npos);
  CHECK(table.str().find("termination: max_iterations") != std::string::npos);
  CHECK(table.str().find("best step 2") != std::string::npos);
}

TEST_CASE("termination names") {
  CHECK(std::string(termination_name(Termination::tolerance_met)) == "tolerance_met");
  CHECK(std::string(termination_name(Termination::max_iterations)) == "max_iterations");
  CHECK(std::string(termination_name(Termination::diverged)) == "diverged");
  CHECK(std::string(termination_name(Termination::newton_failure)) == "newton_failure");
}
