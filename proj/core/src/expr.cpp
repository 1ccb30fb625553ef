#include "blowup/expr.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <unordered_map>

namespace blowup {

namespace {

Expr make(NodeKind k) {
  auto n = std::make_shared<ExprNode>();
  n->kind = k;
  return n;
}

bool is_const(const Expr& e) { return e->kind == NodeKind::Constant; }

bool is_int_exponent(double p) {
  return p == std::rint(p) && std::abs(p) < 1e9;
}

double pow_kernel(double base, double expo) {
  if (is_int_exponent(expo)) {
    if (base == 0.0 && expo < 0.0) throw domain_error("0 raised to a negative power");
    return std::pow(base, expo);
  }
  if (base < 0.0) throw domain_error("non-integer power of a negative base");
  if (base == 0.0 && expo < 0.0) throw domain_error("0 raised to a negative power");
  return std::pow(base, expo);
}

double func_kernel(FuncKind f, double v) {
  switch (f) {
    case FuncKind::Sin: return std::sin(v);
    case FuncKind::Cos: return std::cos(v);
    case FuncKind::Exp: return std::exp(v);
    case FuncKind::Log:
      if (v <= 0.0) throw domain_error("log of a nonpositive value");
      return std::log(v);
    case FuncKind::Sqrt:
      if (v < 0.0) throw domain_error("sqrt of a negative value");
      return std::sqrt(v);
    case FuncKind::Abs: return std::abs(v);
    case FuncKind::Sign: return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0);
  }
  return 0.0;
}

const char* func_name(FuncKind f) {
  switch (f) {
    case FuncKind::Sin: return "sin";
    case FuncKind::Cos: return "cos";
    case FuncKind::Exp: return "exp";
    case FuncKind::Log: return "log";
    case FuncKind::Sqrt: return "sqrt";
    case FuncKind::Abs: return "abs";
    case FuncKind::Sign: return "sign";
  }
  return "?";
}

}  // namespace

Expr constant(double v) {
  auto n = make(NodeKind::Constant);
  const_cast<ExprNode*>(n.get())->value = v;
  return n;
}

Expr time_var() { return make(NodeKind::Time); }

Expr state_var(int index) {
  auto n = make(NodeKind::Var);
  const_cast<ExprNode*>(n.get())->var = index;
  return n;
}

bool is_constant(const Expr& e, double v) {
  return e->kind == NodeKind::Constant && e->value == v;
}

Expr neg(Expr a) {
  if (is_const(a)) return constant(-a->value);
  auto n = make(NodeKind::Neg);
  const_cast<ExprNode*>(n.get())->a = std::move(a);
  return n;
}

Expr add(Expr a, Expr b) {
  if (is_const(a) && is_const(b)) return constant(a->value + b->value);
  if (is_constant(a, 0.0)) return b;
  if (is_constant(b, 0.0)) return a;
  auto n = make(NodeKind::Add);
  auto* m = const_cast<ExprNode*>(n.get());
  m->a = std::move(a);
  m->b = std::move(b);
  return n;
}

Expr sub(Expr a, Expr b) {
  if (is_const(a) && is_const(b)) return constant(a->value - b->value);
  if (is_constant(b, 0.0)) return a;
  if (is_constant(a, 0.0)) return neg(std::move(b));
  auto n = make(NodeKind::Sub);
  auto* m = const_cast<ExprNode*>(n.get());
  m->a = std::move(a);
  m->b = std::move(b);
  return n;
}

Expr mul(Expr a, Expr b) {
  if (is_const(a) && is_const(b)) return constant(a->value * b->value);
  if (is_constant(a, 0.0) || is_constant(b, 0.0)) return constant(0.0);
  if (is_constant(a, 1.0)) return b;
  if (is_constant(b, 1.0)) return a;
  auto n = make(NodeKind::Mul);
  auto* m = const_cast<ExprNode*>(n.get());
  m->a = std::move(a);
  m->b = std::move(b);
  return n;
}

Expr div(Expr a, Expr b) {
  if (is_const(a) && is_const(b) && b->value != 0.0) return constant(a->value / b->value);
  if (is_constant(a, 0.0) && !is_constant(b, 0.0)) return constant(0.0);
  if (is_constant(b, 1.0)) return a;
  auto n = make(NodeKind::Div);
  auto* m = const_cast<ExprNode*>(n.get());
  m->a = std::move(a);
  m->b = std::move(b);
  return n;
}

Expr pow(Expr a, double exponent) {
  if (exponent == 1.0) return a;
  if (exponent == 0.0) return constant(1.0);
  if (is_const(a)) {
    if (a->value > 0.0 || is_int_exponent(exponent)) {
      if (!(a->value == 0.0 && exponent < 0.0)) return constant(pow_kernel(a->value, exponent));
    }
  }
  auto n = make(NodeKind::Pow);
  auto* m = const_cast<ExprNode*>(n.get());
  m->a = std::move(a);
  m->value = exponent;
  return n;
}

Expr apply(FuncKind f, Expr a) {
  if (is_const(a)) {
    if (!((f == FuncKind::Log && a->value <= 0.0) || (f == FuncKind::Sqrt && a->value < 0.0)))
      return constant(func_kernel(f, a->value));
  }
  auto n = make(NodeKind::Func);
  auto* m = const_cast<ExprNode*>(n.get());
  m->a = std::move(a);
  m->func = f;
  return n;
}

// ---------------------------------------------------------------------------
// Parser

namespace {

struct Parser {
  std::string_view src;
  std::size_t pos = 0;
  std::span<const std::string> states;

  void skip_ws() {
    while (pos < src.size() && std::isspace(static_cast<unsigned char>(src[pos]))) ++pos;
  }

  bool eat(char c) {
    skip_ws();
    if (pos < src.size() && src[pos] == c) {
      ++pos;
      return true;
    }
    return false;
  }

  char peek() {
    skip_ws();
    return pos < src.size() ? src[pos] : '\0';
  }

  [[noreturn]] void fail(const std::string& msg) { throw parse_error(msg, pos); }

  double number() {
    skip_ws();
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(src.data() + pos, src.data() + src.size(), v);
    if (ec != std::errc{} || ptr == src.data() + pos) fail("expected a number");
    pos = static_cast<std::size_t>(ptr - src.data());
    return v;
  }

  std::string ident() {
    skip_ws();
    std::size_t start = pos;
    while (pos < src.size() &&
           (std::isalnum(static_cast<unsigned char>(src[pos])) || src[pos] == '_'))
      ++pos;
    return std::string(src.substr(start, pos - start));
  }

  Expr expr() {
    Expr e = term();
    for (;;) {
      if (eat('+')) e = add(e, term());
      else if (eat('-')) e = sub(e, term());
      else return e;
    }
  }

  Expr term() {
    Expr e = factor();
    for (;;) {
      if (eat('*')) e = mul(e, factor());
      else if (eat('/')) e = div(e, factor());
      else return e;
    }
  }

  Expr factor() {
    if (eat('-')) return neg(factor());
    Expr b = base();
    if (eat('^')) return blowup::pow(b, exponent());
    return b;
  }

  double exponent() {
    skip_ws();
    std::size_t at = pos;
    if (eat('(')) {
      Expr e = expr();
      if (!eat(')')) fail("expected ')' closing the exponent");
      if (e->kind != NodeKind::Constant) {
        pos = at;
        fail("variable exponent; exponents must be real constants");
      }
      return e->value;
    }
    char c = peek();
    if (c == '-' || c == '+' || std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      bool negv = eat('-');
      if (!negv) eat('+');
      double v = number();
      return negv ? -v : v;
    }
    fail("variable exponent; exponents must be real constants");
  }

  Expr base() {
    char c = peek();
    if (c == '(') {
      eat('(');
      Expr e = expr();
      if (!eat(')')) fail("expected ')'");
      return e;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return constant(number());
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t at = pos;
      std::string name = ident();
      if (peek() == '(') {
        static const std::pair<const char*, FuncKind> funcs[] = {
            {"sin", FuncKind::Sin}, {"cos", FuncKind::Cos},   {"exp", FuncKind::Exp},
            {"log", FuncKind::Log}, {"sqrt", FuncKind::Sqrt}, {"abs", FuncKind::Abs},
            {"sign", FuncKind::Sign}};
        for (auto& [fn, fk] : funcs) {
          if (name == fn) {
            eat('(');
            Expr arg = expr();
            if (!eat(')')) fail("expected ')' closing call to " + name);
            return apply(fk, arg);
          }
        }
        pos = at;
        fail("unknown function '" + name + "'");
      }
      if (name == "t") return time_var();
      for (std::size_t i = 0; i < states.size(); ++i)
        if (states[i] == name) return state_var(static_cast<int>(i));
      pos = at;
      fail("unknown identifier '" + name + "'");
    }
    fail("expected a number, identifier or '('");
  }
};

}  // namespace

Expr parse(std::string_view source, std::span<const std::string> state_names) {
  Parser p{source, 0, state_names};
  Expr e = p.expr();
  p.skip_ws();
  if (p.pos != source.size()) p.fail("unexpected trailing input");
  return e;
}

// ---------------------------------------------------------------------------
// Evaluation

double eval(const Expr& e, double t, std::span<const double> x) {
  switch (e->kind) {
    case NodeKind::Constant: return e->value;
    case NodeKind::Time: return t;
    case NodeKind::Var: return x[static_cast<std::size_t>(e->var)];
    case NodeKind::Neg: return -eval(e->a, t, x);
    case NodeKind::Add: return eval(e->a, t, x) + eval(e->b, t, x);
    case NodeKind::Sub: return eval(e->a, t, x) - eval(e->b, t, x);
    case NodeKind::Mul: return eval(e->a, t, x) * eval(e->b, t, x);
    case NodeKind::Div: {
      double num = eval(e->a, t, x);
      double den = eval(e->b, t, x);
      if (den == 0.0) throw domain_error("division by zero");
      return num / den;
    }
    case NodeKind::Pow: return pow_kernel(eval(e->a, t, x), e->value);
    case NodeKind::Func: return func_kernel(e->func, eval(e->a, t, x));
  }
  return 0.0;
}

// ---------------------------------------------------------------------------
// Differentiation

namespace {

using DiffMemo = std::unordered_map<const ExprNode*, Expr>;

Expr diff_impl(const Expr& e, int var, DiffMemo& memo) {
  auto it = memo.find(e.get());
  if (it != memo.end()) return it->second;
  Expr r;
  switch (e->kind) {
    case NodeKind::Constant: r = constant(0.0); break;
    case NodeKind::Time: r = constant(var == -1 ? 1.0 : 0.0); break;
    case NodeKind::Var: r = constant(e->var == var ? 1.0 : 0.0); break;
    case NodeKind::Neg: r = neg(diff_impl(e->a, var, memo)); break;
    case NodeKind::Add: r = add(diff_impl(e->a, var, memo), diff_impl(e->b, var, memo)); break;
    case NodeKind::Sub: r = sub(diff_impl(e->a, var, memo), diff_impl(e->b, var, memo)); break;
    case NodeKind::Mul:
      r = add(mul(diff_impl(e->a, var, memo), e->b), mul(e->a, diff_impl(e->b, var, memo)));
      break;
    case NodeKind::Div:
      // (a/b)' = a'/b - a b'/b^2
      r = sub(div(diff_impl(e->a, var, memo), e->b),
              div(mul(e->a, diff_impl(e->b, var, memo)), pow(e->b, 2.0)));
      break;
    case NodeKind::Pow:
      r = mul(mul(constant(e->value), pow(e->a, e->value - 1.0)), diff_impl(e->a, var, memo));
      break;
    case NodeKind::Func: {
      Expr da = diff_impl(e->a, var, memo);
      switch (e->func) {
        case FuncKind::Sin: r = mul(apply(FuncKind::Cos, e->a), da); break;
        case FuncKind::Cos: r = neg(mul(apply(FuncKind::Sin, e->a), da)); break;
        case FuncKind::Exp: r = mul(apply(FuncKind::Exp, e->a), da); break;
        case FuncKind::Log: r = div(da, e->a); break;
        case FuncKind::Sqrt: r = div(da, mul(constant(2.0), apply(FuncKind::Sqrt, e->a))); break;
        case FuncKind::Abs: r = mul(apply(FuncKind::Sign, e->a), da); break;
        case FuncKind::Sign: r = constant(0.0); break;
      }
      break;
    }
  }
  memo.emplace(e.get(), r);
  return r;
}

}  // namespace

Expr diff(const Expr& e, int var) {
  DiffMemo memo;
  return diff_impl(e, var, memo);
}

// ---------------------------------------------------------------------------
// Printing

namespace {

int precedence(const ExprNode& n) {
  switch (n.kind) {
    case NodeKind::Add:
    case NodeKind::Sub: return 1;
    case NodeKind::Mul:
    case NodeKind::Div: return 2;
    case NodeKind::Neg: return 3;
    case NodeKind::Pow: return 4;
    default: return 5;
  }
}

void print_double(std::string& out, double v) {
  std::array<char, 32> buf;
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  out.append(buf.data(), ptr);
}

struct Printer {
  std::span<const std::string> names;

  void var_name(std::string& out, int index) const {
    if (static_cast<std::size_t>(index) < names.size()) {
      out += names[static_cast<std::size_t>(index)];
    } else {
      out += 'x';
      out += std::to_string(index);
    }
  }

  void go(std::string& out, const Expr& e, int parent_prec) const {
    int prec = precedence(*e);
    bool parens = prec < parent_prec;
    if (parens) out += '(';
    switch (e->kind) {
      case NodeKind::Constant: print_double(out, e->value); break;
      case NodeKind::Time: out += 't'; break;
      case NodeKind::Var: var_name(out, e->var); break;
      case NodeKind::Neg:
        out += '-';
        go(out, e->a, 3);
        break;
      case NodeKind::Add:
        go(out, e->a, 1);
        out += " + ";
        go(out, e->b, 2);
        break;
      case NodeKind::Sub:
        go(out, e->a, 1);
        out += " - ";
        go(out, e->b, 2);
        break;
      case NodeKind::Mul:
        go(out, e->a, 2);
        out += '*';
        go(out, e->b, 3);
        break;
      case NodeKind::Div:
        go(out, e->a, 2);
        out += '/';
        go(out, e->b, 3);
        break;
      case NodeKind::Pow:
        go(out, e->a, 5);
        out += '^';
        if (e->value < 0) {
          out += '(';
          print_double(out, e->value);
          out += ')';
        } else {
          print_double(out, e->value);
        }
        break;
      case NodeKind::Func:
        out += func_name(e->func);
        out += '(';
        go(out, e->a, 0);
        out += ')';
        break;
    }
    if (parens) out += ')';
  }
};

}  // namespace

std::string to_string(const Expr& e, std::span<const std::string> state_names) {
  std::string out;
  Printer{state_names}.go(out, e, 0);
  return out;
}

std::string to_string(const Expr& e) { return to_string(e, {}); }

bool structurally_equal(const Expr& a, const Expr& b) {
  if (a.get() == b.get()) return true;
  if (a->kind != b->kind) return false;
  switch (a->kind) {
    case NodeKind::Constant: return a->value == b->value;
    case NodeKind::Time: return true;
    case NodeKind::Var: return a->var == b->var;
    case NodeKind::Neg: return structurally_equal(a->a, b->a);
    case NodeKind::Pow: return a->value == b->value && structurally_equal(a->a, b->a);
    case NodeKind::Func: return a->func == b->func && structurally_equal(a->a, b->a);
    default:
      return structurally_equal(a->a, b->a) && structurally_equal(a->b, b->b);
  }
}

// ---------------------------------------------------------------------------
// Tape compilation

Tape Tape::compile(std::span<const Expr> roots) {
  Tape tape;
  std::unordered_map<const ExprNode*, std::int32_t> memo;

  struct Rec {
    Tape& t;
    std::unordered_map<const ExprNode*, std::int32_t>& memo;

    std::int32_t go(const Expr& e) {
      auto it = memo.find(e.get());
      if (it != memo.end()) return it->second;
      Ins ins;
      switch (e->kind) {
        case NodeKind::Constant: ins = {Op::Const, 0, 0, e->value}; break;
        case NodeKind::Time: ins = {Op::LoadT, 0, 0, 0.0}; break;
        case NodeKind::Var: ins = {Op::LoadX, e->var, 0, 0.0}; break;
        case NodeKind::Neg: ins = {Op::Neg, go(e->a), 0, 0.0}; break;
        case NodeKind::Add: ins = {Op::Add, go(e->a), go(e->b), 0.0}; break;
        case NodeKind::Sub: ins = {Op::Sub, go(e->a), go(e->b), 0.0}; break;
        case NodeKind::Mul: ins = {Op::Mul, go(e->a), go(e->b), 0.0}; break;
        case NodeKind::Div: ins = {Op::Div, go(e->a), go(e->b), 0.0}; break;
        case NodeKind::Pow:
          ins = {is_int_exponent(e->value) && std::abs(e->value) <= 64 ? Op::PowInt : Op::PowReal,
                 go(e->a), 0, e->value};
          break;
        case NodeKind::Func: {
          Op op{};
          switch (e->func) {
            case FuncKind::Sin: op = Op::Sin; break;
            case FuncKind::Cos: op = Op::Cos; break;
            case FuncKind::Exp: op = Op::Exp; break;
            case FuncKind::Log: op = Op::Log; break;
            case FuncKind::Sqrt: op = Op::Sqrt; break;
            case FuncKind::Abs: op = Op::Abs; break;
            case FuncKind::Sign: op = Op::Sign; break;
          }
          ins = {op, go(e->a), 0, 0.0};
          break;
        }
      }
      auto slot = static_cast<std::int32_t>(t.code_.size());
      t.code_.push_back(ins);
      memo.emplace(e.get(), slot);
      return slot;
    }
  } rec{tape, memo};

  for (const Expr& r : roots) tape.outputs_.push_back(rec.go(r));
  return tape;
}

void Tape::eval(double t, std::span<const double> x, Workspace& ws,
                std::span<double> out) const {
  auto& v = ws.slots;
  v.resize(code_.size());
  double* s = v.data();
  for (std::size_t i = 0; i < code_.size(); ++i) {
    const Ins& ins = code_[i];
    double r;
    switch (ins.op) {
      case Op::Const: r = ins.imm; break;
      case Op::LoadT: r = t; break;
      case Op::LoadX: r = x[static_cast<std::size_t>(ins.a)]; break;
      case Op::Neg: r = -s[ins.a]; break;
      case Op::Add: r = s[ins.a] + s[ins.b]; break;
      case Op::Sub: r = s[ins.a] - s[ins.b]; break;
      case Op::Mul: r = s[ins.a] * s[ins.b]; break;
      case Op::Div: {
        double den = s[ins.b];
        if (den == 0.0) throw domain_error("division by zero");
        r = s[ins.a] / den;
        break;
      }
      case Op::PowInt: {
        double base = s[ins.a];
        long long p = static_cast<long long>(ins.imm);
        if (base == 0.0 && p < 0) throw domain_error("0 raised to a negative power");
        bool inv = p < 0;
        unsigned long long q = static_cast<unsigned long long>(inv ? -p : p);
        double acc = 1.0, b2 = base;
        while (q) {
          if (q & 1ull) acc *= b2;
          b2 *= b2;
          q >>= 1;
        }
        r = inv ? 1.0 / acc : acc;
        break;
      }
      case Op::PowReal: r = pow_kernel(s[ins.a], ins.imm); break;
      case Op::Sin: r = std::sin(s[ins.a]); break;
      case Op::Cos: r = std::cos(s[ins.a]); break;
      case Op::Exp: r = std::exp(s[ins.a]); break;
      case Op::Log:
        if (s[ins.a] <= 0.0) throw domain_error("log of a nonpositive value");
        r = std::log(s[ins.a]);
        break;
      case Op::Sqrt:
        if (s[ins.a] < 0.0) throw domain_error("sqrt of a negative value");
        r = std::sqrt(s[ins.a]);
        break;
      case Op::Abs: r = std::abs(s[ins.a]); break;
      case Op::Sign: r = s[ins.a] > 0.0 ? 1.0 : (s[ins.a] < 0.0 ? -1.0 : 0.0);  break;
      default: r = 0.0; break;
    }
    s[i] = r;
  }
  for (std::size_t i = 0; i < outputs_.size(); ++i) out[i] = s[outputs_[i]];
}

}  // namespace blowup
