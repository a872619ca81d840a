#pragma once

#include <functional>
#include <iosfwd>
#include <vector>

#include "canard/errors.hpp"

namespace canard {

struct BuildOptions {
  // Acceptance: the trailing two coefficients must fall below
  // tolerance * max|c_k|. Trailing coefficients below a tenth of that
  // are dropped from the stored series.
  double tolerance = 1e-12;
  // Degree ladder cap. Sample counts go 17, 33, ..., max_degree + 1.
  int max_degree = 16384;
  // Acceptance floor for functions assembled from much larger terms:
  // when positive, acceptance and chopping use tolerance * max(scale,
  // max|c_k|). A residual whose true values sit near the rounding noise
  // of its own assembly can never satisfy a purely relative tail test;
  // passing the magnitude of the assembled terms here makes the
  // tolerance absolute at that scale.
  double scale = 0;
};

// A smooth real function on [a,b], stored as a Chebyshev series
//   g(x) = sum c_k T_k(t),  t = (2x - a - b)/(b - a).
//
// Values are immutable and every operation is pure, so instances are safe
// to share across threads. Degrees adapt at construction; everything
// downstream (derivative, deflation, roots, norms) operates on the stored
// coefficients.
class IntervalFunction {
public:
  // Adaptive construction. f is sampled on nested Chebyshev grids, each
  // level in ascending x order, so evaluators that continue a solution
  // branch (pointwise Newton with the previous value as seed) see nearby
  // seeds throughout. Throws BuildError when f returns a non-finite value
  // or the ladder is exhausted without meeting tolerance.
  static IntervalFunction build(const std::function<double(double)>& f, double a, double b,
                                const BuildOptions& opts = {});

  // Wraps existing coefficients {c_0, ..., c_n} on [a,b] unchanged.
  static IntervalFunction from_coefficients(std::vector<double> coefficients, double a, double b);

  // Clenshaw evaluation. x must lie in [a,b] up to a small slack; outside
  // that, throws IntervalError.
  double operator()(double x) const;

  // Exact derivative of the stored polynomial, rescaled for [a,b].
  IntervalFunction derivative() const;

  // Synthetic division by the linear factor: returns h with
  //   (x - x0) h(x) == g(x) - g(x0)  on [a,b],  h(x0) == g'(x0).
  // The remainder g(x0) is discarded, so g(x0) need not be zero.
  IntervalFunction deflate_root(double x0) const;

  // All real roots in [a,b], sorted, polished to ~1e-10. Degrees above 64
  // are handled by interval subdivision; each leaf solves a colleague
  // eigenvalue problem. Empty when there are none.
  std::vector<double> roots() const;

  // max |g| over [a,b], from the derivative's roots plus the endpoints.
  double sup_norm() const;

  // min |g| over [a,b]; zero exactly when g has a root in the interval.
  double min_abs() const;

  double lo() const { return a_; }
  double hi() const { return b_; }
  const std::vector<double>& coefficients() const { return c_; }
  int degree() const { return static_cast<int>(c_.size()) - 1; }

  // Coefficient-level linear arithmetic; both operands must share [a,b].
  friend IntervalFunction operator+(const IntervalFunction& f, const IntervalFunction& g);
  friend IntervalFunction operator-(const IntervalFunction& f, const IntervalFunction& g);
  friend IntervalFunction operator*(double s, const IntervalFunction& g);
  IntervalFunction operator-() const;

  // Pointwise product, computed by resampling and rebuilding.
  friend IntervalFunction operator*(const IntervalFunction& f, const IntervalFunction& g);

  // Uniform-grid samples as CSV with the exact header "x,value".
  void write_csv(std::ostream& out, int n_samples = 513) const;

private:
  IntervalFunction() = default;

  double to_unit(double x) const;  // x -> t with out-of-domain check
  double eval_unit(double t) const;

  std::vector<double> c_;
  double a_ = -1;
  double b_ = 1;
};

}  // namespace canard
