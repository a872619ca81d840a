#include "canard/interval_function.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <ostream>
#include <string>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

namespace canard {

namespace {

constexpr double kPi = 3.141592653589793238462643383279502884;

// Chebyshev points of the second kind on [a,b], ascending in x.
std::vector<double> chebyshev_nodes(int n_intervals, double a, double b) {
  std::vector<double> x(static_cast<std::size_t>(n_intervals) + 1);
  double mid = 0.5 * (a + b);
  double half = 0.5 * (b - a);
  for (int i = 0; i <= n_intervals; ++i) {
    // cos of the complementary angle keeps the grid exactly symmetric.
    double t = std::cos(static_cast<double>(n_intervals - i) * kPi / n_intervals);
    x[static_cast<std::size_t>(i)] = mid + half * t;
  }
  x.front() = a;
  x.back() = b;
  return x;
}

// Type-I DCT of samples at second-kind points. values[i] is f at the
// ascending node i, so index N-j is the sample at t_j = cos(j pi / N).
std::vector<double> chebyshev_coefficients(const std::vector<double>& values) {
  const int n = static_cast<int>(values.size()) - 1;
  std::vector<double> c(values.size());
  if (n == 0) {
    c[0] = values[0];
    return c;
  }
  std::vector<double> costab(2 * static_cast<std::size_t>(n));
  for (int m = 0; m < 2 * n; ++m) costab[static_cast<std::size_t>(m)] = std::cos(m * kPi / n);
  for (int k = 0; k <= n; ++k) {
    double s = 0.5 * values[static_cast<std::size_t>(n)];  // j = 0, t = +1
    for (int j = 1; j < n; ++j) {
      std::size_t idx = static_cast<std::size_t>((static_cast<long long>(k) * j) % (2 * n));
      s += values[static_cast<std::size_t>(n - j)] * costab[idx];
    }
    double sign = (k % 2 == 0) ? 1.0 : -1.0;  // j = N, t = -1
    s += 0.5 * sign * values[0];
    c[static_cast<std::size_t>(k)] = 2.0 * s / n;
  }
  c[0] *= 0.5;
  c[static_cast<std::size_t>(n)] *= 0.5;
  return c;
}

double max_abs_coeff(const std::vector<double>& c) {
  double m = 0;
  for (double v : c) m = std::max(m, std::fabs(v));
  return m;
}

void chop_trailing(std::vector<double>& c, double floor) {
  std::size_t keep = 1;
  for (std::size_t k = c.size(); k-- > 1;) {
    if (std::fabs(c[k]) > floor) {
      keep = k + 1;
      break;
    }
  }
  c.resize(keep);
}

std::string format_double(double v) {
  std::array<char, 64> buf;
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  (void)ec;
  return std::string(buf.data(), end);
}

// Effective degree once coefficients below rel_floor * max|c| are ignored;
// -1 for an (effectively) zero series.
int effective_degree(const std::vector<double>& c, double rel_floor) {
  double maxc = max_abs_coeff(c);
  if (maxc == 0) return -1;
  double floor = rel_floor * maxc;
  for (std::size_t k = c.size(); k-- > 0;) {
    if (std::fabs(c[k]) > floor) return static_cast<int>(k);
  }
  return -1;
}

// Eigenvalues of the colleague matrix of sum_{k<=d} c_k T_k, d >= 1.
// Real parts of near-real eigenvalues in [-1,1] (with slack) are returned
// in normalized coordinates.
std::vector<double> colleague_roots(const std::vector<double>& c, int d) {
  std::vector<double> out;
  if (d == 1) {
    out.push_back(-c[0] / c[1]);
    return out;
  }
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(d, d);
  m(0, 1) = 1.0;
  for (int k = 1; k < d - 1; ++k) {
    m(k, k - 1) = 0.5;
    m(k, k + 1) = 0.5;
  }
  double inv = 1.0 / (2.0 * c[static_cast<std::size_t>(d)]);
  for (int j = 0; j < d; ++j) m(d - 1, j) = -c[static_cast<std::size_t>(j)] * inv;
  m(d - 1, d - 2) += 0.5;
  Eigen::EigenSolver<Eigen::MatrixXd> solver(m, /*computeEigenvectors=*/false);
  if (solver.info() != Eigen::Success) return out;
  for (int i = 0; i < d; ++i) {
    std::complex<double> ev = solver.eigenvalues()(i);
    if (std::fabs(ev.imag()) <= 1e-8 && std::fabs(ev.real()) <= 1.0 + 1e-8)
      out.push_back(ev.real());
  }
  return out;
}

double clenshaw(const std::vector<double>& c, double t) {
  double b1 = 0, b2 = 0;
  for (std::size_t k = c.size(); k-- > 1;) {
    double b0 = c[k] + 2.0 * t * b1 - b2;
    b2 = b1;
    b1 = b0;
  }
  return c[0] + t * b1 - b2;
}

}  // namespace

double IntervalFunction::to_unit(double x) const {
  double t = (2.0 * x - a_ - b_) / (b_ - a_);
  if (t < -1.0 - 1e-10 || t > 1.0 + 1e-10)
    throw IntervalError("evaluation at x=" + format_double(x) + " outside [" +
                        format_double(a_) + ", " + format_double(b_) + "]");
  return std::clamp(t, -1.0, 1.0);
}

double IntervalFunction::eval_unit(double t) const { return clenshaw(c_, t); }

double IntervalFunction::operator()(double x) const { return eval_unit(to_unit(x)); }

IntervalFunction IntervalFunction::build(const std::function<double(double)>& f, double a,
                                         double b, const BuildOptions& opts) {
  if (!(a < b)) throw BuildError("empty interval [" + format_double(a) + ", " + format_double(b) + "]");
  if (!(opts.tolerance > 0)) throw BuildError("tolerance must be positive");

  for (int n = 16; n <= opts.max_degree; n *= 2) {
    std::vector<double> nodes = chebyshev_nodes(n, a, b);
    std::vector<double> values(nodes.size());
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      values[i] = f(nodes[i]);
      if (!std::isfinite(values[i]))
        throw BuildError("non-finite sample at x=" + format_double(nodes[i]));
    }
    std::vector<double> c = chebyshev_coefficients(values);
    double maxc = max_abs_coeff(c);
    if (maxc == 0) {
      IntervalFunction g;
      g.c_ = {0.0};
      g.a_ = a;
      g.b_ = b;
      return g;
    }
    std::size_t last = c.size() - 1;
    double floor = opts.tolerance * std::max(maxc, opts.scale);
    if (std::fabs(c[last]) <= floor && std::fabs(c[last - 1]) <= floor) {
      chop_trailing(c, 0.1 * floor);
      IntervalFunction g;
      g.c_ = std::move(c);
      g.a_ = a;
      g.b_ = b;
      return g;
    }
  }
  throw BuildError("no convergence to tolerance " + format_double(opts.tolerance) + " on [" +
                   format_double(a) + ", " + format_double(b) + "] within degree " +
                   std::to_string(opts.max_degree));
}

IntervalFunction IntervalFunction::from_coefficients(std::vector<double> coefficients, double a,
                                                     double b) {
  if (coefficients.empty()) throw IntervalError("empty coefficient list");
  if (!(a < b)) throw IntervalError("empty interval");
  for (double v : coefficients)
    if (!std::isfinite(v)) throw IntervalError("non-finite coefficient");
  IntervalFunction g;
  g.c_ = std::move(coefficients);
  g.a_ = a;
  g.b_ = b;
  return g;
}

IntervalFunction IntervalFunction::derivative() const {
  IntervalFunction g;
  g.a_ = a_;
  g.b_ = b_;
  std::size_t n = c_.size();
  if (n <= 1) {
    g.c_ = {0.0};
    return g;
  }
  std::vector<double> d(n - 1, 0.0);
  // d_k = d_{k+2} + 2 (k+1) c_{k+1}, downward; then halve d_0.
  for (std::size_t k = n - 1; k-- > 0;) {
    double above = (k + 2 < n - 1) ? d[k + 2] : 0.0;
    d[k] = above + 2.0 * static_cast<double>(k + 1) * c_[k + 1];
  }
  d[0] *= 0.5;
  double scale = 2.0 / (b_ - a_);
  for (double& v : d) v *= scale;
  g.c_ = std::move(d);
  return g;
}

IntervalFunction IntervalFunction::deflate_root(double x0) const {
  double t0 = to_unit(x0);
  IntervalFunction g;
  g.a_ = a_;
  g.b_ = b_;
  std::size_t n = c_.size();
  if (n <= 1) {
    g.c_ = {0.0};
    return g;
  }
  // Clenshaw intermediates at t0 double as the quotient of the synthetic
  // division: q = b_1 T_0 + sum_{k>=1} 2 b_{k+1} T_k.
  std::vector<double> bk(n + 2, 0.0);
  for (std::size_t k = n; k-- > 1;) bk[k] = c_[k] + 2.0 * t0 * bk[k + 1] - bk[k + 2];
  std::vector<double> d(n - 1);
  d[0] = bk[1];
  for (std::size_t k = 1; k < n - 1; ++k) d[k] = 2.0 * bk[k + 1];
  double scale = 2.0 / (b_ - a_);  // the linear factor lives in x, not t
  for (double& v : d) v *= scale;
  g.c_ = std::move(d);
  return g;
}

std::vector<double> IntervalFunction::roots() const {
  std::vector<double> raw;

  // Normalizedation keeps colleague entries well scaled.
  double maxc = max_abs_coeff(c_);
  if (maxc == 0) return raw;

  struct Frame {
    double lo, hi;
    std::vector<double> c;  // series on [lo,hi], normalized scale
    int depth;
  };

  std::vector<double> base = c_;
  for (double& v : base) v /= maxc;

  std::vector<Frame> stack;
  stack.push_back({a_, b_, std::move(base), 0});

  BuildOptions sub_opts;
  sub_opts.tolerance = 1e-13;

  while (!stack.empty()) {
    Frame fr = std::move(stack.back());
    stack.pop_back();

    int d = effective_degree(fr.c, 1e-12);
    if (d <= 0) continue;

    if (d <= 64) {
      std::vector<double> chopped(fr.c.begin(), fr.c.begin() + d + 1);
      std::vector<double> leaf_roots;
      for (double t : colleague_roots(chopped, d)) {
        double x = 0.5 * (fr.lo + fr.hi) + 0.5 * (fr.hi - fr.lo) * t;
        leaf_roots.push_back(x);
      }
      // Safety net: a sign-change scan catches anything the eigensolve
      // missed or that the realness filter dropped.
      IntervalFunction leaf;
      leaf.c_ = std::move(fr.c);
      leaf.a_ = fr.lo;
      leaf.b_ = fr.hi;
      const int scan = 64;
      double prev_x = fr.lo, prev_v = leaf(fr.lo);
      for (int i = 1; i <= scan; ++i) {
        double x = fr.lo + (fr.hi - fr.lo) * i / scan;
        double v = leaf(x);
        if (prev_v == 0.0) leaf_roots.push_back(prev_x);
        if ((prev_v < 0 && v > 0) || (prev_v > 0 && v < 0)) {
          bool covered = false;
          for (double r : leaf_roots)
            if (r >= prev_x && r <= x) covered = true;
          if (!covered) {
            double lo = prev_x, hi = x, flo = prev_v;
            for (int it = 0; it < 80 && hi - lo > 1e-14 * (fr.hi - fr.lo); ++it) {
              double m = 0.5 * (lo + hi);
              double fm = leaf(m);
              if (fm == 0.0) {
                lo = hi = m;
                break;
              }
              if ((flo < 0) != (fm < 0)) {
                hi = m;
              } else {
                lo = m;
                flo = fm;
              }
            }
            leaf_roots.push_back(0.5 * (lo + hi));
          }
        }
        prev_x = x;
        prev_v = v;
      }
      if (leaf(fr.hi) == 0.0) leaf_roots.push_back(fr.hi);
      raw.insert(raw.end(), leaf_roots.begin(), leaf_roots.end());
      continue;
    }

    if (fr.depth >= 12)
      throw IntervalError("root subdivision depth exceeded");

    // Slightly off-center split so grid-aligned roots do not land on a cut.
    double mid = fr.lo + 0.49817 * (fr.hi - fr.lo);
    IntervalFunction piece;
    piece.c_ = std::move(fr.c);
    piece.a_ = fr.lo;
    piece.b_ = fr.hi;
    auto eval = [&piece](double x) { return piece(x); };
    IntervalFunction left = build(eval, fr.lo, mid, sub_opts);
    IntervalFunction right = build(eval, mid, fr.hi, sub_opts);
    stack.push_back({mid, fr.hi, std::move(right.c_), fr.depth + 1});
    stack.push_back({fr.lo, mid, std::move(left.c_), fr.depth + 1});
  }

  if (raw.empty()) return raw;

  // Newton polish against the full-resolution series.
  IntervalFunction deriv = derivative();
  std::vector<double> out;
  double span = b_ - a_;
  for (double x : raw) {
    x = std::clamp(x, a_, b_);
    for (int it = 0; it < 3; ++it) {
      double p = (*this)(x);
      double dp = deriv(x);
      if (dp == 0) break;
      double step = p / dp;
      if (!std::isfinite(step) || std::fabs(step) > 0.1 * span) break;
      x = std::clamp(x - step, a_, b_);
    }
    if (std::fabs((*this)(x)) <= 5e-10 * maxc) out.push_back(x);
  }

  std::sort(out.begin(), out.end());
  std::vector<double> dedup;
  double merge = 1e-9 * span;
  for (double x : out) {
    if (dedup.empty() || x - dedup.back() > merge) dedup.push_back(x);
  }
  return dedup;
}

double IntervalFunction::sup_norm() const {
  double m = std::max(std::fabs((*this)(a_)), std::fabs((*this)(b_)));
  if (c_.size() > 1) {
    for (double r : derivative().roots()) m = std::max(m, std::fabs((*this)(r)));
  }
  for (int i = 0; i <= 32; ++i) {
    double x = a_ + (b_ - a_) * i / 32.0;
    m = std::max(m, std::fabs((*this)(x)));
  }
  return m;
}

double IntervalFunction::min_abs() const {
  if (!roots().empty()) return 0.0;
  double m = std::min(std::fabs((*this)(a_)), std::fabs((*this)(b_)));
  if (c_.size() > 1) {
    for (double r : derivative().roots()) m = std::min(m, std::fabs((*this)(r)));
  }
  for (int i = 0; i <= 32; ++i) {
    double x = a_ + (b_ - a_) * i / 32.0;
    m = std::min(m, std::fabs((*this)(x)));
  }
  return m;
}

namespace {

void require_same_domain(const IntervalFunction& f, const IntervalFunction& g) {
  if (f.lo() != g.lo() || f.hi() != g.hi())
    throw IntervalError("operands live on different intervals");
}

}  // namespace

IntervalFunction operator+(const IntervalFunction& f, const IntervalFunction& g) {
  require_same_domain(f, g);
  std::vector<double> c(std::max(f.c_.size(), g.c_.size()), 0.0);
  for (std::size_t k = 0; k < f.c_.size(); ++k) c[k] += f.c_[k];
  for (std::size_t k = 0; k < g.c_.size(); ++k) c[k] += g.c_[k];
  return IntervalFunction::from_coefficients(std::move(c), f.a_, f.b_);
}

IntervalFunction operator-(const IntervalFunction& f, const IntervalFunction& g) {
  require_same_domain(f, g);
  std::vector<double> c(std::max(f.c_.size(), g.c_.size()), 0.0);
  for (std::size_t k = 0; k < f.c_.size(); ++k) c[k] += f.c_[k];
  for (std::size_t k = 0; k < g.c_.size(); ++k) c[k] -= g.c_[k];
  return IntervalFunction::from_coefficients(std::move(c), f.a_, f.b_);
}

IntervalFunction operator*(double s, const IntervalFunction& g) {
  std::vector<double> c = g.c_;
  for (double& v : c) v *= s;
  return IntervalFunction::from_coefficients(std::move(c), g.a_, g.b_);
}

IntervalFunction IntervalFunction::operator-() const { return -1.0 * *this; }

IntervalFunction operator*(const IntervalFunction& f, const IntervalFunction& g) {
  require_same_domain(f, g);
  auto eval = [&f, &g](double x) { return f(x) * g(x); };
  return IntervalFunction::build(eval, f.a_, f.b_);
}

void IntervalFunction::write_csv(std::ostream& out, int n_samples) const {
  if (n_samples < 2) throw IntervalError("csv needs at least two samples");
  out << "x,value\n";
  for (int i = 0; i < n_samples; ++i) {
    double x = a_ + (b_ - a_) * i / (n_samples - 1);
    out << format_double(x) << ',' << format_double((*this)(x)) << '\n';
  }
}

}  // namespace canard
