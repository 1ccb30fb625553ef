#pragma once

#include <optional>

#include "blowup/embedding.hpp"
#include "blowup/system.hpp"
#include "blowup/types.hpp"

namespace blowup {

// Desingularized extended vector field in embedded coordinates:
//
//   g_0 = (1 - (2c-1)/(2c) (1 - p2c)) (1 - p2c)^k
//   g_j = (1 - (2c-1)/(2c) (1 - p2c)) ftilde_j - G alpha_j x_j
//   G   = sum_{j in I_alpha} x_j^(2 beta_j - 1) / alpha_j ftilde_j
//
// where ftilde_j = kappa^-(k+alpha_j) f_j(t, kappa^Lambda x) with every
// kappa power distributed into the expression tree through its scaling
// weight, so the symbolic forms stay finite across the horizon.
struct DesingField {
  SystemDef sys;
  EmbeddingSpec spec;

  Expr p2c_expr;
  Expr one_minus_p2c;
  Expr prefactor;
  Expr g0;
  std::vector<Expr> ftilde;     // rows 1..n, residual included
  std::vector<Expr> ftilde_qh;  // rows 1..n, quasi-homogeneous part only
  Expr G;
  std::vector<Expr> g;          // rows 1..n

  Tape field_tape;       // outputs: g0, g_1..g_n, G
  Tape jacobian_tape;    // outputs: d g^ext / d(t,x), (n+1)^2 row-major
  Tape ftilde_jac_tape;  // outputs: D ftilde (n x (n+1)), then the qh variant
};

DesingField build(const SystemDef& sys);

struct FieldValue {
  double g0 = 0.0;
  Vector g;
  double G = 0.0;
  double p2c = 0.0;
};

FieldValue eval_field(const DesingField& df, double t, const Vector& x);

// Reusable evaluator for inner loops (owns its tape workspace).
class FieldEval {
public:
  explicit FieldEval(const DesingField& df);
  // Writes g^ext = (g0, g_1..g_n) into gout[0..n] and returns G.
  double operator()(double t, std::span<const double> x, std::span<double> gout);

private:
  const DesingField* df_;
  Tape::Workspace ws_;
  std::vector<double> out_;
};

// Jacobian of g^ext in (t, x) from the symbolic derivatives.
Matrix jacobian(const DesingField& df, double t, const Vector& x);

// D ftilde in (t, x); rows 1..n of the extended field. qh_only selects the
// quasi-homogeneous part (they agree at horizon equilibria).
Matrix ftilde_jacobian(const DesingField& df, double t, const Vector& x, bool qh_only);

// Matrices entering Dg^ext_* = A_g^ext + B_g^ext + [k=1] A_g^res at a
// horizon equilibrium.
struct EquilibriumDecomposition {
  double t_star = 0.0;
  Vector x_star;
  double C_star = 0.0;
  double k = 1.0;
  long long c = 1;

  Vector v_ext;    // (0, Lambda_alpha x*)
  Vector Dp_ext;   // gradient of p_alpha at x*, time slot 0
  Matrix P_ext;    // projection v_ext Dp_ext^T
  Matrix Ag_ext;   // -C* Lambda^ext + [[0,0],[Dt ftilde, Dx ftilde]]
  Matrix Bg_ext;   // -P (Ag_ext + C* I)
  Matrix Ares;     // zero unless k = 1
  Matrix Dg;       // symbolic Jacobian of g^ext at (t*, x*)
  Vector Dt_g;     // column 0 of Dg, rows 1..n
  Matrix Dx_g;     // lower-right n x n block of Dg

  double decomposition_residual = 0.0;  // max-abs of Ag+Bg+Ares - Dg
  double qh_jacobian_gap = 0.0;         // max-abs of D ftilde - D ftilde_qh
};

// Rejects points that are not horizon equilibria (|p2c - 1| > 1e-12 or
// ||g^ext|| > 1e-9) and decompositions whose residual exceeds 1e-7.
EquilibriumDecomposition decompose_at_equilibrium(const DesingField& df, double t_star,
                                                  const Vector& x_star);

}  // namespace blowup
