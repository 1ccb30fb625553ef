#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

// Expression DSL: parse, evaluate, differentiate.
//
// Grammar:
//   expr     := term (('+'|'-') term)*
//   term     := factor (('*'|'/') factor)*
//   factor   := '-' factor | power
//   power    := base ('^' exponent)?
//   base     := number | ident | func '(' expr ')' | '(' expr ')'
//   exponent := signed-number | '(' constant expression ')'
//
// '^' binds tighter than unary minus, so -u^2 parses as -(u^2).
// Exponents must fold to a real constant; variables in exponents are
// rejected. `t` is the reserved time symbol. Functions: sin, cos, exp,
// log, sqrt, abs (plus sign, which differentiation of abs produces).

namespace blowup {

class domain_error : public std::runtime_error {
public:
  explicit domain_error(const std::string& what) : std::runtime_error(what) {}
};

class parse_error : public std::runtime_error {
public:
  parse_error(const std::string& what, std::size_t offset)
      : std::runtime_error(what + " (at byte " + std::to_string(offset) + ")"),
        offset_(offset) {}
  std::size_t offset() const { return offset_; }

private:
  std::size_t offset_;
};

enum class NodeKind : std::uint8_t {
  Constant,
  Time,   // the reserved symbol t
  Var,    // state variable by index
  Neg,
  Add,
  Sub,
  Mul,
  Div,
  Pow,    // child ^ constant real exponent
  Func,
};

enum class FuncKind : std::uint8_t { Sin, Cos, Exp, Log, Sqrt, Abs, Sign };

struct ExprNode;
using Expr = std::shared_ptr<const ExprNode>;

struct ExprNode {
  NodeKind kind;
  double value = 0.0;  // Constant payload, or Pow exponent
  int var = -1;        // Var payload
  FuncKind func = FuncKind::Sin;
  Expr a, b;
};

// Smart constructors; all fold constant subtrees (0*e, e+0, e^1, ...).
Expr constant(double v);
Expr time_var();
Expr state_var(int index);
Expr neg(Expr a);
Expr add(Expr a, Expr b);
Expr sub(Expr a, Expr b);
Expr mul(Expr a, Expr b);
Expr div(Expr a, Expr b);
Expr pow(Expr a, double exponent);
Expr apply(FuncKind f, Expr a);

bool is_constant(const Expr& e, double v);

// Parses `source` against the given state names. Throws parse_error.
Expr parse(std::string_view source, std::span<const std::string> state_names);

// Recursive evaluation. Throws domain_error on log/sqrt/fractional powers
// of negative values, 0^negative and division by zero.
double eval(const Expr& e, double t, std::span<const double> x);

// Symbolic partial derivative. var = -1 differentiates in t.
Expr diff(const Expr& e, int var);

// Prints with the given state names (falls back to x0, x1, ... when the
// index has no name). Round trips: parse(to_string(e, names), names) is
// structurally equal to e.
std::string to_string(const Expr& e, std::span<const std::string> state_names);
std::string to_string(const Expr& e);
bool structurally_equal(const Expr& a, const Expr& b);

// Flat stack-machine compilation of one or more roots. Subtrees shared by
// pointer identity across roots are computed once, so composite fields
// built from shared pieces stay cheap to evaluate in inner loops.
class Tape {
public:
  struct Workspace {
    std::vector<double> slots;
  };

  static Tape compile(std::span<const Expr> roots);

  std::size_t num_outputs() const { return outputs_.size(); }
  std::size_t num_slots() const { return code_.size(); }

  // Evaluates all roots; writes num_outputs() values into `out`.
  void eval(double t, std::span<const double> x, Workspace& ws,
            std::span<double> out) const;

private:
  enum class Op : std::uint8_t {
    Const, LoadT, LoadX, Neg, Add, Sub, Mul, Div, PowInt, PowReal,
    Sin, Cos, Exp, Log, Sqrt, Abs, Sign,
  };
  struct Ins {
    Op op;
    std::int32_t a = 0, b = 0;
    double imm = 0.0;
  };
  std::vector<Ins> code_;
  std::vector<std::int32_t> outputs_;
};

}  // namespace blowup
