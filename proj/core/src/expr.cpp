#include "canard/expr.hpp"

#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstring>

namespace canard {

namespace {

using Node = Expression::Node;
using UnaryFn = Expression::UnaryFn;
using BinOp = Expression::BinOp;

// ---------------------------------------------------------------------------
// forward-mode duals, one value plus partials w.r.t. slots 0..2

struct Dual {
  double v = 0, dx = 0, dy = 0, dz = 0;
};

inline Dual operator+(Dual a, Dual b) { return {a.v + b.v, a.dx + b.dx, a.dy + b.dy, a.dz + b.dz}; }
inline Dual operator-(Dual a, Dual b) { return {a.v - b.v, a.dx - b.dx, a.dy - b.dy, a.dz - b.dz}; }
inline Dual operator*(Dual a, Dual b) {
  return {a.v * b.v, a.v * b.dx + a.dx * b.v, a.v * b.dy + a.dy * b.v, a.v * b.dz + a.dz * b.v};
}
inline Dual operator/(Dual a, Dual b) {
  double w = 1.0 / b.v;
  double v = a.v * w;
  return {v, (a.dx - v * b.dx) * w, (a.dy - v * b.dy) * w, (a.dz - v * b.dz) * w};
}

// f(u) with f' supplied: the chain rule in one place.
inline Dual chain(Dual u, double f, double fp) { return {f, fp * u.dx, fp * u.dy, fp * u.dz}; }

inline bool has_partials(Dual u) { return u.dx != 0 || u.dy != 0 || u.dz != 0; }

inline double value_of(double a) { return a; }
inline double value_of(Dual a) { return a.v; }

template <class T>
T from_const(double c);
template <>
double from_const<double>(double c) { return c; }
template <>
Dual from_const<Dual>(double c) { return {c, 0, 0, 0}; }

template <class T>
T from_slot(const double* slots, int s);
template <>
double from_slot<double>(const double* slots, int s) { return slots[s]; }
template <>
Dual from_slot<Dual>(const double* slots, int s) {
  return {slots[s], s == 0 ? 1.0 : 0.0, s == 1 ? 1.0 : 0.0, s == 2 ? 1.0 : 0.0};
}

[[noreturn]] void domain_error(const char* what, std::uint32_t offset) {
  throw EvalError(std::string(what) + " (byte " + std::to_string(offset) + ")");
}

inline double apply_neg(double a) { return -a; }
inline Dual apply_neg(Dual a) { return {-a.v, -a.dx, -a.dy, -a.dz}; }
inline double apply_sin(double a) { return std::sin(a); }
inline Dual apply_sin(Dual a) { return chain(a, std::sin(a.v), std::cos(a.v)); }
inline double apply_cos(double a) { return std::cos(a); }
inline Dual apply_cos(Dual a) { return chain(a, std::cos(a.v), -std::sin(a.v)); }
inline double apply_tan(double a) { return std::tan(a); }
inline Dual apply_tan(Dual a) {
  double t = std::tan(a.v);
  return chain(a, t, 1.0 + t * t);
}
inline double apply_exp(double a) { return std::exp(a); }
inline Dual apply_exp(Dual a) {
  double e = std::exp(a.v);
  return chain(a, e, e);
}

inline double apply_log(double a, std::uint32_t off) {
  if (!(a > 0)) domain_error("log of non-positive argument", off);
  return std::log(a);
}
inline Dual apply_log(Dual a, std::uint32_t off) {
  if (!(a.v > 0)) domain_error("log of non-positive argument", off);
  return chain(a, std::log(a.v), 1.0 / a.v);
}

inline double apply_sqrt(double a, std::uint32_t off) {
  if (a < 0) domain_error("sqrt of negative argument", off);
  return std::sqrt(a);
}
inline Dual apply_sqrt(Dual a, std::uint32_t off) {
  if (a.v < 0) domain_error("sqrt of negative argument", off);
  if (a.v == 0 && has_partials(a)) domain_error("sqrt not differentiable at 0", off);
  double r = std::sqrt(a.v);
  return chain(a, r, a.v == 0 ? 0.0 : 0.5 / r);
}

inline double apply_abs(double a, std::uint32_t) { return std::fabs(a); }
inline Dual apply_abs(Dual a, std::uint32_t off) {
  if (a.v == 0 && has_partials(a)) domain_error("abs not differentiable at 0", off);
  return a.v < 0 ? apply_neg(a) : a;
}

template <class T>
T reciprocal(T a) { return from_const<T>(1.0) / a; }
template <>
double reciprocal<double>(double a) { return 1.0 / a; }

// Exact integer power by repeated squaring; valid for any base, and on
// duals it propagates derivatives through the same multiplications.
template <class T>
T int_power(T base, long long n) {
  if (n == 0) return from_const<T>(1.0);
  bool inv = n < 0;
  unsigned long long k = inv ? static_cast<unsigned long long>(-(n + 1)) + 1ull
                             : static_cast<unsigned long long>(n);
  T acc = from_const<T>(1.0);
  T sq = base;
  while (k) {
    if (k & 1ull) acc = acc * sq;
    k >>= 1;
    if (k) sq = sq * sq;
  }
  return inv ? reciprocal(acc) : acc;
}

inline bool integral_exponent(double b, long long& n) {
  if (!std::isfinite(b) || std::fabs(b) > 1e15) return false;
  double r = std::nearbyint(b);
  if (r != b) return false;
  n = static_cast<long long>(r);
  return true;
}

inline double apply_pow(double a, double b, std::uint32_t off) {
  long long n;
  if (integral_exponent(b, n)) return int_power(a, n);
  if (a > 0) return std::pow(a, b);
  if (a == 0 && b > 0) return 0.0;
  domain_error("pow with non-positive base and non-integer exponent", off);
}
inline Dual apply_pow(Dual a, Dual b, std::uint32_t off) {
  long long n;
  if (!has_partials(b) && integral_exponent(b.v, n)) return int_power(a, n);
  if (a.v > 0) {
    double f = std::pow(a.v, b.v);
    double la = std::log(a.v);
    // d(a^b) = a^b (b' ln a + b a'/a)
    return {f,
            f * (b.dx * la + b.v * a.dx / a.v),
            f * (b.dy * la + b.v * a.dy / a.v),
            f * (b.dz * la + b.v * a.dz / a.v)};
  }
  domain_error("pow with non-positive base and non-integer exponent", off);
}

template <class T>
T interp(const std::vector<Node>& nodes, std::uint32_t i, const double* slots) {
  const Node& n = nodes[i];
  switch (n.kind) {
    case Node::Kind::constant:
      return from_const<T>(n.value);
    case Node::Kind::variable:
      return from_slot<T>(slots, n.slot);
    case Node::Kind::int_pow:
      return int_power(interp<T>(nodes, n.a, slots), n.exponent);
    case Node::Kind::unary: {
      T u = interp<T>(nodes, n.a, slots);
      switch (n.fn) {
        case UnaryFn::neg: return apply_neg(u);
        case UnaryFn::sin: return apply_sin(u);
        case UnaryFn::cos: return apply_cos(u);
        case UnaryFn::tan: return apply_tan(u);
        case UnaryFn::exp: return apply_exp(u);
        case UnaryFn::log: return apply_log(u, n.offset);
        case UnaryFn::sqrt: return apply_sqrt(u, n.offset);
        case UnaryFn::abs: return apply_abs(u, n.offset);
      }
      break;
    }
    case Node::Kind::binary: {
      T a = interp<T>(nodes, n.a, slots);
      T b = interp<T>(nodes, n.b, slots);
      switch (n.op) {
        case BinOp::add: return a + b;
        case BinOp::sub: return a - b;
        case BinOp::mul: return a * b;
        case BinOp::div: return a / b;
        case BinOp::pow: return apply_pow(a, b, n.offset);
      }
      break;
    }
  }
  throw EvalError("corrupt expression node");
}

std::string format_number(double v) {
  std::array<char, 64> buf;
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  (void)ec;
  return std::string(buf.data(), end);
}

}  // namespace

// ---------------------------------------------------------------------------
// parser

class ExprParser {
public:
  ExprParser(std::string_view text, std::span<const std::string> names)
      : text_(text), names_(names) {}

  Expression run() {
    Expression e;
    e.names_.assign(names_.begin(), names_.end());
    next_token();
    e.root_ = parse_expr();
    if (tok_ != Tok::end) fail("unexpected trailing input", tok_start_);
    e.nodes_ = std::move(nodes_);
    return e;
  }

private:
  enum class Tok { number, ident, plus, minus, star, slash, caret, lparen, rparen, comma, end };

  std::string_view text_;
  std::span<const std::string> names_;
  std::vector<Node> nodes_;

  Tok tok_ = Tok::end;
  std::size_t pos_ = 0;
  std::size_t tok_start_ = 0;
  double tok_num_ = 0;
  std::string_view tok_text_;

  [[noreturn]] void fail(const std::string& what, std::size_t offset) {
    throw ParseError(what, offset);
  }

  static bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
  static bool ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

  void next_token() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    tok_start_ = pos_;
    if (pos_ >= text_.size()) {
      tok_ = Tok::end;
      return;
    }
    char c = text_[pos_];
    switch (c) {
      case '+': tok_ = Tok::plus; ++pos_; return;
      case '-': tok_ = Tok::minus; ++pos_; return;
      case '*': tok_ = Tok::star; ++pos_; return;
      case '/': tok_ = Tok::slash; ++pos_; return;
      case '^': tok_ = Tok::caret; ++pos_; return;
      case '(': tok_ = Tok::lparen; ++pos_; return;
      case ')': tok_ = Tok::rparen; ++pos_; return;
      case ',': tok_ = Tok::comma; ++pos_; return;
      default: break;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      const char* first = text_.data() + pos_;
      const char* last = text_.data() + text_.size();
      double v = 0;
      auto [ptr, ec] = std::from_chars(first, last, v);
      if (ec != std::errc() || ptr == first) fail("malformed number", pos_);
      pos_ += static_cast<std::size_t>(ptr - first);
      tok_ = Tok::number;
      tok_num_ = v;
      return;
    }
    if (ident_start(c)) {
      std::size_t b = pos_;
      while (pos_ < text_.size() && ident_char(text_[pos_])) ++pos_;
      tok_ = Tok::ident;
      tok_text_ = text_.substr(b, pos_ - b);
      return;
    }
    fail(std::string("unexpected character '") + c + "'", pos_);
  }

  std::uint32_t add(Node n) {
    nodes_.push_back(n);
    return static_cast<std::uint32_t>(nodes_.size() - 1);
  }

  std::uint32_t make_const(double v, std::size_t off) {
    Node n;
    n.kind = Node::Kind::constant;
    n.value = v;
    n.offset = static_cast<std::uint32_t>(off);
    return add(n);
  }

  std::uint32_t make_binary(BinOp op, std::uint32_t a, std::uint32_t b, std::size_t off) {
    if (op == BinOp::pow) {
      long long e;
      if (nodes_[b].kind == Node::Kind::constant && integral_exponent(nodes_[b].value, e)) {
        Node n;
        n.kind = Node::Kind::int_pow;
        n.exponent = e;
        n.a = a;
        n.offset = static_cast<std::uint32_t>(off);
        return add(n);
      }
    }
    Node n;
    n.kind = Node::Kind::binary;
    n.op = op;
    n.a = a;
    n.b = b;
    n.offset = static_cast<std::uint32_t>(off);
    return add(n);
  }

  std::uint32_t parse_expr() {
    std::uint32_t lhs = parse_term();
    while (tok_ == Tok::plus || tok_ == Tok::minus) {
      BinOp op = tok_ == Tok::plus ? BinOp::add : BinOp::sub;
      std::size_t off = tok_start_;
      next_token();
      std::uint32_t rhs = parse_term();
      lhs = make_binary(op, lhs, rhs, off);
    }
    return lhs;
  }

  std::uint32_t parse_term() {
    std::uint32_t lhs = parse_factor();
    while (tok_ == Tok::star || tok_ == Tok::slash) {
      BinOp op = tok_ == Tok::star ? BinOp::mul : BinOp::div;
      std::size_t off = tok_start_;
      next_token();
      std::uint32_t rhs = parse_factor();
      lhs = make_binary(op, lhs, rhs, off);
    }
    return lhs;
  }

  // unary sign sits between * and ^ in precedence, so -x^2 is -(x^2)
  std::uint32_t parse_factor() {
    if (tok_ == Tok::minus) {
      std::size_t off = tok_start_;
      next_token();
      std::uint32_t c = parse_factor();
      if (nodes_[c].kind == Node::Kind::constant) {
        nodes_[c].value = -nodes_[c].value;  // fold the literal sign
        return c;
      }
      Node n;
      n.kind = Node::Kind::unary;
      n.fn = UnaryFn::neg;
      n.a = c;
      n.offset = static_cast<std::uint32_t>(off);
      return add(n);
    }
    if (tok_ == Tok::plus) {
      next_token();
      return parse_factor();
    }
    return parse_power();
  }

  std::uint32_t parse_power() {
    std::uint32_t base = parse_primary();
    if (tok_ == Tok::caret) {
      std::size_t off = tok_start_;
      next_token();
      std::uint32_t e = parse_factor();  // right-associative, sign allowed
      return make_binary(BinOp::pow, base, e, off);
    }
    return base;
  }

  struct FnDesc {
    const char* name;
    UnaryFn fn;
  };
  static constexpr std::array<FnDesc, 7> kFunctions = {{
      {"sin", UnaryFn::sin},
      {"cos", UnaryFn::cos},
      {"tan", UnaryFn::tan},
      {"exp", UnaryFn::exp},
      {"log", UnaryFn::log},
      {"sqrt", UnaryFn::sqrt},
      {"abs", UnaryFn::abs},
  }};

  std::uint32_t parse_primary() {
    switch (tok_) {
      case Tok::number: {
        double v = tok_num_;
        std::size_t off = tok_start_;
        next_token();
        return make_const(v, off);
      }
      case Tok::lparen: {
        next_token();
        std::uint32_t e = parse_expr();
        if (tok_ != Tok::rparen) fail("expected ')'", tok_start_);
        next_token();
        return e;
      }
      case Tok::ident: {
        std::string_view name = tok_text_;
        std::size_t off = tok_start_;
        next_token();
        if (tok_ == Tok::lparen) return parse_call(name, off);
        for (std::size_t i = 0; i < names_.size(); ++i) {
          if (names_[i] == name) {
            Node n;
            n.kind = Node::Kind::variable;
            n.slot = static_cast<int>(i);
            n.offset = static_cast<std::uint32_t>(off);
            return add(n);
          }
        }
        fail("undeclared identifier '" + std::string(name) + "'", off);
      }
      case Tok::end:
        fail("unexpected end of input", tok_start_);
      default:
        fail("unexpected token", tok_start_);
    }
  }

  std::uint32_t parse_call(std::string_view name, std::size_t off) {
    next_token();  // consume '('
    if (name == "pow") {
      std::uint32_t a = parse_expr();
      if (tok_ != Tok::comma) fail("pow expects two arguments", tok_start_);
      next_token();
      std::uint32_t b = parse_expr();
      if (tok_ != Tok::rparen) fail("expected ')'", tok_start_);
      next_token();
      return make_binary(BinOp::pow, a, b, off);
    }
    for (const FnDesc& d : kFunctions) {
      if (name == d.name) {
        std::uint32_t a = parse_expr();
        if (tok_ == Tok::comma) fail(std::string(d.name) + " expects one argument", tok_start_);
        if (tok_ != Tok::rparen) fail("expected ')'", tok_start_);
        next_token();
        Node n;
        n.kind = Node::Kind::unary;
        n.fn = d.fn;
        n.a = a;
        n.offset = static_cast<std::uint32_t>(off);
        return add(n);
      }
    }
    fail("unknown function '" + std::string(name) + "'", off);
  }
};

// ---------------------------------------------------------------------------
// Expression

Expression Expression::parse(std::string_view text, std::span<const std::string> declared_names) {
  return ExprParser(text, declared_names).run();
}

double Expression::evaluate(std::span<const double> values) const {
  if (values.size() < names_.size()) throw EvalError("too few values bound");
  return interp<double>(nodes_, root_, values.data());
}

GradResult Expression::evaluate_with_gradient(std::span<const double> values) const {
  if (values.size() < names_.size()) throw EvalError("too few values bound");
  Dual d = interp<Dual>(nodes_, root_, values.data());
  return {d.v, d.dx, d.dy, d.dz};
}

std::vector<double> Expression::slots_from_map(const std::map<std::string, double>& values) const {
  std::vector<double> slots(names_.size(), 0.0);
  for (std::size_t i = 0; i < names_.size(); ++i) {
    auto it = values.find(names_[i]);
    if (it == values.end()) throw EvalError("no value bound for '" + names_[i] + "'");
    slots[i] = it->second;
  }
  return slots;
}

double Expression::evaluate(const std::map<std::string, double>& values) const {
  return evaluate(std::span<const double>(slots_from_map(values)));
}

GradResult Expression::evaluate_with_gradient(const std::map<std::string, double>& values) const {
  return evaluate_with_gradient(std::span<const double>(slots_from_map(values)));
}

namespace {

// precedence levels for printing: +- 1, */ 2, unary 3, ^ 4, atoms 5
int prec_of(const std::vector<Node>& nodes, std::uint32_t i) {
  const Node& n = nodes[i];
  switch (n.kind) {
    case Node::Kind::constant:
      return n.value < 0 ? 3 : 5;  // negative literal prints with its sign
    case Node::Kind::variable:
      return 5;
    case Node::Kind::int_pow:
      return 4;
    case Node::Kind::unary:
      return n.fn == UnaryFn::neg ? 3 : 5;  // named calls are atoms
    case Node::Kind::binary:
      switch (n.op) {
        case BinOp::add:
        case BinOp::sub: return 1;
        case BinOp::mul:
        case BinOp::div: return 2;
        case BinOp::pow: return 4;
      }
  }
  return 5;
}

}  // namespace

std::string Expression::to_string() const {
  std::string out;
  out.reserve(nodes_.size() * 4);
  // Recursive lambda with access to names_.
  auto rec = [&](auto&& self, std::uint32_t i, int min_prec) -> void {
    const Node& n = nodes_[i];
    bool parens = prec_of(nodes_, i) < min_prec;
    if (parens) out += '(';
    switch (n.kind) {
      case Node::Kind::variable:
        out += names_[static_cast<std::size_t>(n.slot)];
        break;
      case Node::Kind::constant:
        out += format_number(n.value);
        break;
      case Node::Kind::int_pow:
        self(self, n.a, 5);
        out += '^';
        if (n.exponent < 0) {
          out += '(';
          out += std::to_string(n.exponent);
          out += ')';
        } else {
          out += std::to_string(n.exponent);
        }
        break;
      case Node::Kind::unary:
        if (n.fn == UnaryFn::neg) {
          out += '-';
          self(self, n.a, 3);
        } else {
          switch (n.fn) {
            case UnaryFn::sin: out += "sin("; break;
            case UnaryFn::cos: out += "cos("; break;
            case UnaryFn::tan: out += "tan("; break;
            case UnaryFn::exp: out += "exp("; break;
            case UnaryFn::log: out += "log("; break;
            case UnaryFn::sqrt: out += "sqrt("; break;
            case UnaryFn::abs: out += "abs("; break;
            case UnaryFn::neg: break;
          }
          self(self, n.a, 0);
          out += ')';
        }
        break;
      case Node::Kind::binary:
        switch (n.op) {
          case BinOp::add:
            self(self, n.a, 1);
            out += " + ";
            self(self, n.b, 2);
            break;
          case BinOp::sub:
            self(self, n.a, 1);
            out += " - ";
            self(self, n.b, 2);
            break;
          case BinOp::mul:
            self(self, n.a, 2);
            out += '*';
            self(self, n.b, 3);
            break;
          case BinOp::div:
            self(self, n.a, 2);
            out += '/';
            self(self, n.b, 3);
            break;
          case BinOp::pow:
            self(self, n.a, 5);
            out += '^';
            self(self, n.b, 4);
            break;
        }
        break;
    }
    if (parens) out += ')';
  };
  rec(rec, root_, 0);
  return out;
}

namespace {

bool nodes_equal(const std::vector<Node>& an, std::uint32_t a,
                 const std::vector<Node>& bn, std::uint32_t b) {
  const Node& x = an[a];
  const Node& y = bn[b];
  if (x.kind != y.kind) return false;
  switch (x.kind) {
    case Node::Kind::constant:
      return x.value == y.value;
    case Node::Kind::variable:
      return x.slot == y.slot;
    case Node::Kind::int_pow:
      return x.exponent == y.exponent && nodes_equal(an, x.a, bn, y.a);
    case Node::Kind::unary:
      return x.fn == y.fn && nodes_equal(an, x.a, bn, y.a);
    case Node::Kind::binary:
      return x.op == y.op && nodes_equal(an, x.a, bn, y.a) && nodes_equal(an, x.b, bn, y.b);
  }
  return false;
}

}  // namespace

bool operator==(const Expression& a, const Expression& b) {
  return a.names_ == b.names_ && nodes_equal(a.nodes_, a.root_, b.nodes_, b.root_);
}

// ---------------------------------------------------------------------------
// SystemDef

namespace {
constexpr std::size_t kMaxSlots = 64;
}

SystemDef SystemDef::make(const std::string& f_text, const std::string& g_text,
                          const std::vector<std::pair<std::string, double>>& constants) {
  std::vector<std::string> names = {"x", "y", "z"};
  std::vector<double> values;
  for (const auto& [name, value] : constants) {
    if (name == "x" || name == "y" || name == "z")
      throw Error("constant '" + name + "' shadows a variable");
    for (const auto& existing : names)
      if (existing == name) throw Error("duplicate constant '" + name + "'");
    names.push_back(name);
    values.push_back(value);
  }
  if (names.size() > kMaxSlots) throw Error("too many constants");
  Expression f = Expression::parse(f_text, names);
  Expression g = Expression::parse(g_text, names);
  return SystemDef{std::move(f), std::move(g), std::move(names), std::move(values)};
}

namespace {

struct SlotBuffer {
  std::array<double, kMaxSlots> v;
  std::size_t n;
};

inline SlotBuffer fill_slots(const SystemDef& s, double x, double y, double z) {
  SlotBuffer b;
  b.n = 3 + s.constants.size();
  b.v[0] = x;
  b.v[1] = y;
  b.v[2] = z;
  std::memcpy(b.v.data() + 3, s.constants.data(), s.constants.size() * sizeof(double));
  return b;
}

}  // namespace

double SystemDef::eval_F(double x, double y, double z) const {
  SlotBuffer b = fill_slots(*this, x, y, z);
  return F.evaluate(std::span<const double>(b.v.data(), b.n));
}

double SystemDef::eval_G(double x, double y, double z) const {
  SlotBuffer b = fill_slots(*this, x, y, z);
  return G.evaluate(std::span<const double>(b.v.data(), b.n));
}

GradResult SystemDef::grad_F(double x, double y, double z) const {
  SlotBuffer b = fill_slots(*this, x, y, z);
  return F.evaluate_with_gradient(std::span<const double>(b.v.data(), b.n));
}

GradResult SystemDef::grad_G(double x, double y, double z) const {
  SlotBuffer b = fill_slots(*this, x, y, z);
  return G.evaluate_with_gradient(std::span<const double>(b.v.data(), b.n));
}

}  // namespace canard
