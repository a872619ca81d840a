#include <cmath>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "doctest.h"

#include "canard/errors.hpp"
#include "canard/expr.hpp"

using canard::EvalError;
using canard::Expression;
using canard::GradResult;
using canard::ParseError;
using canard::SystemDef;

namespace {

const std::vector<std::string> kXyz = {"x", "y", "z"};

Expression parse_xyz(const std::string& text) { return Expression::parse(text, kXyz); }

double eval_at(const Expression& e, double x, double y, double z) {
  const double v[] = {x, y, z};
  return e.evaluate(v);
}

GradResult grad_at(const Expression& e, double x, double y, double z) {
  const double v[] = {x, y, z};
  return e.evaluate_with_gradient(v);
}

}  // namespace

TEST_CASE("literals, precedence, powers") {
  CHECK(eval_at(parse_xyz("2^10"), 0, 0, 0) == 1024.0);
  CHECK(eval_at(parse_xyz("2 + 3*4"), 0, 0, 0) == 14.0);
  CHECK(eval_at(parse_xyz("(2 + 3)*4"), 0, 0, 0) == 20.0);
  CHECK(eval_at(parse_xyz("2^3^2"), 0, 0, 0) == 512.0);  // right-associative
  CHECK(eval_at(parse_xyz("-2^2"), 0, 0, 0) == -4.0);    // ^ binds tighter than unary -
  CHECK(eval_at(parse_xyz("1e2 + 2.5e-1"), 0, 0, 0) == 100.25);
  CHECK(eval_at(parse_xyz("x^-2"), 2, 0, 0) == 0.25);
  // integer exponents stay exact for negative bases
  CHECK(eval_at(parse_xyz("(-2)^3"), 0, 0, 0) == -8.0);
  CHECK(eval_at(parse_xyz("x^3"), -2, 0, 0) == -8.0);
  CHECK(eval_at(parse_xyz("pow(x, 3)"), -2, 0, 0) == -8.0);
  CHECK(eval_at(parse_xyz("2*-x"), 3, 0, 0) == -6.0);
}

TEST_CASE("van der Pol fast field: value and gradient") {
  Expression f = parse_xyz("y - x^3/3 + x");
  CHECK(eval_at(f, 2, 0, 0) == doctest::Approx(-2.0 / 3.0).epsilon(1e-15));
  GradResult g = grad_at(f, 2, 0, 0);
  CHECK(g.dx == doctest::Approx(-3.0).epsilon(1e-15));  // 1 - x^2 at x = 2
  CHECK(g.dy == 1.0);
  CHECK(g.dz == 0.0);
  // dF/dx vanishes at the fold abscissa x = 1
  CHECK(grad_at(f, 1, 0, 0).dx == doctest::Approx(0.0));
}

TEST_CASE("slow field gradient carries the parameter slot") {
  std::vector<std::string> names = {"x", "y", "z", "eps"};
  Expression g = Expression::parse("eps*(z - x)", names);
  const double v[] = {1.0, -2.0 / 3.0, 0.9, 0.05};
  GradResult r = g.evaluate_with_gradient(v);
  CHECK(r.value == doctest::Approx(0.05 * (0.9 - 1.0)).epsilon(1e-15));
  CHECK(r.dx == doctest::Approx(-0.05).epsilon(1e-15));
  CHECK(r.dy == 0.0);
  CHECK(r.dz == doctest::Approx(0.05).epsilon(1e-15));
}

TEST_CASE("parse errors carry a byte offset") {
  CHECK_THROWS_AS(parse_xyz("x + "), ParseError);
  CHECK_THROWS_AS(parse_xyz("x + w"), ParseError);
  CHECK_THROWS_AS(parse_xyz("(x + y"), ParseError);
  CHECK_THROWS_AS(parse_xyz("x + * y"), ParseError);
  CHECK_THROWS_AS(parse_xyz("sin()"), ParseError);
  CHECK_THROWS_AS(parse_xyz("pow(x)"), ParseError);
  CHECK_THROWS_AS(parse_xyz("sin(x, y)"), ParseError);
  CHECK_THROWS_AS(parse_xyz(""), ParseError);
  CHECK_THROWS_AS(parse_xyz("x y"), ParseError);

  try {
    parse_xyz("x + w");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.offset() == 4);
    CHECK(std::string(e.what()).find("w") != std::string::npos);
  }
  try {
    parse_xyz("x + ");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.offset() == 4);
  }
}

TEST_CASE("evaluation domain errors") {
  CHECK_THROWS_AS(eval_at(parse_xyz("log(x)"), -1, 0, 0), EvalError);
  CHECK_THROWS_AS(eval_at(parse_xyz("log(x)"), 0, 0, 0), EvalError);
  CHECK_THROWS_AS(eval_at(parse_xyz("sqrt(x)"), -2, 0, 0), EvalError);
  // fractional power of a negative base
  CHECK_THROWS_AS(eval_at(parse_xyz("x^0.5"), -2, 0, 0), EvalError);
  CHECK_THROWS_AS(eval_at(parse_xyz("pow(x, y)"), -2.0, 0.5, 0), EvalError);
  // abs is fine pointwise at 0 but has no derivative there
  CHECK(eval_at(parse_xyz("abs(x)"), 0, 0, 0) == 0.0);
  CHECK_THROWS_AS(grad_at(parse_xyz("abs(x)"), 0, 0, 0), EvalError);
  CHECK(grad_at(parse_xyz("abs(x)"), -3, 0, 0).dx == -1.0);
  // division by zero follows IEEE, no throw
  CHECK(std::isinf(eval_at(parse_xyz("1/x"), 0, 0, 0)));
}

TEST_CASE("print then reparse gives a structurally identical tree") {
  const char* cases[] = {
      "x - (y - z)",
      "x/(y*z)",
      "-(x + y)",
      "x^y^z",
      "(x + y)^2",
      "x^-2",
      "2*-x",
      "sin(x)*cos(y) - tan(z/4)",
      "exp(-x^2/2)",
      "sqrt(x + 2)*abs(y)",
      "pow(x + 1, y)",
      "y - x^3/3 + x",
      "1/(2 + cos(x))",
  };
  for (const char* text : cases) {
    CAPTURE(text);
    Expression e = parse_xyz(text);
    Expression round = parse_xyz(e.to_string());
    CHECK(e == round);
    CHECK(e.to_string() == round.to_string());
  }
  CHECK(parse_xyz("x + y*z").to_string() == "x + y*z");
  CHECK(parse_xyz("x + y") != parse_xyz("y + x"));
}

// forward-mode partials against central differences at random points
TEST_CASE("gradient matches a central finite difference") {
  const char* cases[] = {
      "sin(x)*exp(y/4) + z^3",
      "x*y*z - x^2/(2 + y^2)",
      "exp(-x^2/2)*cos(3*y) + sqrt(z + 4)",
      "log(2 + x^2)*tan(y/3)",
      "pow(2 + x^2, y/5)",
      "(x - y)^3/3 + z*(x + y)",
      "1/(2 + sin(x) + cos(y))",
  };
  std::mt19937 rng(20260819u);
  std::uniform_real_distribution<double> pt(-1.5, 1.5);
  const double h = 1e-5;
  for (const char* text : cases) {
    Expression e = parse_xyz(text);
    for (int trial = 0; trial < 40; ++trial) {
      double v[3] = {pt(rng), pt(rng), pt(rng)};
      GradResult g = e.evaluate_with_gradient(v);
      double partial[3] = {g.dx, g.dy, g.dz};
      for (int slot = 0; slot < 3; ++slot) {
        double save = v[slot];
        v[slot] = save + h;
        double hi = e.evaluate(v);
        v[slot] = save - h;
        double lo = e.evaluate(v);
        v[slot] = save;
        double fd = (hi - lo) / (2 * h);
        CAPTURE(text);
        CAPTURE(trial);
        CAPTURE(slot);
        double err = std::fabs(partial[slot] - fd);
        CHECK(err <= 1e-6 * std::max(1.0, std::fabs(fd)) + 1e-9);
      }
    }
  }
}

TEST_CASE("evaluation is deterministic") {
  Expression e = parse_xyz("sin(x)*exp(y/4) + z^3 - x/(2 + y^2)");
  Expression e2 = parse_xyz("sin(x)*exp(y/4) + z^3 - x/(2 + y^2)");
  std::mt19937 rng(7u);
  std::uniform_real_distribution<double> pt(-2, 2);
  for (int i = 0; i < 100; ++i) {
    double v[3] = {pt(rng), pt(rng), pt(rng)};
    double a = e.evaluate(v);
    double b = e.evaluate(v);
    double c = e2.evaluate(v);
    CHECK(a == b);  // bitwise
    CHECK(a == c);  // independent parse, same tree, same arithmetic
  }
}

TEST_CASE("map binding checks names") {
  Expression e = parse_xyz("x + 2*y");
  std::map<std::string, double> vals = {{"x", 1.0}, {"y", 2.0}, {"z", 0.0}};
  CHECK(e.evaluate(vals) == 5.0);
  vals.erase("y");
  CHECK_THROWS_AS(e.evaluate(vals), canard::Error);
}

TEST_CASE("SystemDef wires constants after the phase slots") {
  SystemDef sys = SystemDef::make("y - x^3/3 + x", "eps*(z - x)", {{"eps", 0.05}});
  CHECK(sys.eval_F(2, 0, 0) == doctest::Approx(-2.0 / 3.0).epsilon(1e-15));
  CHECK(sys.eval_G(1, -2.0 / 3.0, 0.9) == doctest::Approx(-0.005).epsilon(1e-12));
  CHECK(sys.grad_G(1, 0, 0.9).dz == doctest::Approx(0.05).epsilon(1e-15));
  // a constant may not shadow a phase variable
  CHECK_THROWS_AS(SystemDef::make("y", "x", {{"x", 1.0}}), canard::Error);
  // undeclared constant stays an error even with others present
  CHECK_THROWS_AS(SystemDef::make("y + k", "x", {{"eps", 1.0}}), ParseError);
}
