#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "canard/errors.hpp"

namespace canard {

// Value of an expression together with its partials w.r.t. the first three
// declared names (the phase variables x, y and the parameter z).
struct GradResult {
  double value = 0;
  double dx = 0;
  double dy = 0;
  double dz = 0;
};

// Immutable scalar expression over a fixed set of declared names.
//
// Grammar (see README for the EBNF): +, -, *, / with the usual precedence,
// right-associative ^ binding tighter than unary minus, calls sin, cos,
// tan, exp, log, sqrt, abs, pow(a,b), parentheses, decimal literals.
// Integer exponents are detected at parse time and kept exact, so they are
// valid for negative bases; fractional powers require a positive base when
// evaluated.
class Expression {
public:
  // Throws ParseError (with a byte offset) on syntax errors and on
  // identifiers that are not in declared_names.
  static Expression parse(std::string_view text, std::span<const std::string> declared_names);

  // values[i] is bound to declared_names[i]. Throws EvalError on domain
  // failures; overflow and division by zero follow IEEE arithmetic.
  double evaluate(std::span<const double> values) const;
  // Same, plus forward-mode partials w.r.t. the first three names.
  GradResult evaluate_with_gradient(std::span<const double> values) const;

  // Conveniences binding names through a map. Every declared name must be
  // present.
  double evaluate(const std::map<std::string, double>& values) const;
  GradResult evaluate_with_gradient(const std::map<std::string, double>& values) const;

  // Prints a form that parses back to a structurally identical tree.
  std::string to_string() const;

  const std::vector<std::string>& declared_names() const { return names_; }

  // Structural tree equality (same shapes, same literals, same slots).
  friend bool operator==(const Expression& a, const Expression& b);
  friend bool operator!=(const Expression& a, const Expression& b) { return !(a == b); }

  enum class UnaryFn : std::uint8_t { neg, sin, cos, tan, exp, log, sqrt, abs };
  enum class BinOp : std::uint8_t { add, sub, mul, div, pow };

  struct Node {
    enum class Kind : std::uint8_t { constant, variable, unary, binary, int_pow } kind;
    double value = 0;          // constant
    int slot = -1;             // variable
    UnaryFn fn = UnaryFn::neg; // unary
    BinOp op = BinOp::add;     // binary
    long long exponent = 0;    // int_pow
    std::uint32_t a = 0, b = 0;
    std::uint32_t offset = 0;  // byte offset of the defining token
  };

private:
  Expression() = default;
  std::vector<std::string> names_;
  std::vector<Node> nodes_;
  std::uint32_t root_ = 0;

  std::vector<double> slots_from_map(const std::map<std::string, double>& values) const;
  friend class ExprParser;
};

// A planar slow-fast system x' = F(x,y,z), y' = G(x,y,z) with named real
// constants baked into the evaluation context. Variable order is fixed as
// (x, y, z); z is the bifurcation parameter.
struct SystemDef {
  Expression F, G;
  std::vector<std::string> names;   // "x","y","z", then constant names
  std::vector<double> constants;    // aligned with names[3..]

  static SystemDef make(const std::string& f_text, const std::string& g_text,
                        const std::vector<std::pair<std::string, double>>& constants);

  double eval_F(double x, double y, double z) const;
  double eval_G(double x, double y, double z) const;
  GradResult grad_F(double x, double y, double z) const;
  GradResult grad_G(double x, double y, double z) const;
};

}  // namespace canard
