#include "blowup/desing.hpp"

#include <cmath>

namespace blowup {

namespace {

// Scaling weight of an expression: w such that e(t, s^Lambda y) = s^w e(t, y)
// identically. nullopt when the tree is not weight-homogeneous (then the
// rescaled form cannot be distributed through it).
std::optional<double> weight(const Expr& e, const std::vector<int>& alpha) {
  switch (e->kind) {
    case NodeKind::Constant:
    case NodeKind::Time: return 0.0;
    case NodeKind::Var: return static_cast<double>(alpha[static_cast<std::size_t>(e->var)]);
    case NodeKind::Neg: return weight(e->a, alpha);
    case NodeKind::Add:
    case NodeKind::Sub: {
      auto wa = weight(e->a, alpha);
      auto wb = weight(e->b, alpha);
      if (wa && wb && std::abs(*wa - *wb) < 1e-12) return wa;
      // A sum with a constant-zero side keeps the other side's weight.
      if (wa && is_constant(e->b, 0.0)) return wa;
      if (wb && is_constant(e->a, 0.0)) return wb;
      return std::nullopt;
    }
    case NodeKind::Mul: {
      auto wa = weight(e->a, alpha);
      auto wb = weight(e->b, alpha);
      if (wa && wb) return *wa + *wb;
      if (is_constant(e->a, 0.0) || is_constant(e->b, 0.0)) return 0.0;
      return std::nullopt;
    }
    case NodeKind::Div: {
      auto wa = weight(e->a, alpha);
      auto wb = weight(e->b, alpha);
      if (wa && wb) return *wa - *wb;
      return std::nullopt;
    }
    case NodeKind::Pow: {
      auto wa = weight(e->a, alpha);
      if (wa) return *wa * e->value;
      return std::nullopt;
    }
    case NodeKind::Func: {
      auto wa = weight(e->a, alpha);
      if (wa && *wa == 0.0) return 0.0;
      return std::nullopt;
    }
  }
  return std::nullopt;
}

// kappa^-weight(e) * e(t, kappa^Lambda x) with every kappa power absorbed:
// variables map to themselves, so the result is e with y_i read as x_i.
// Valid for weight-homogeneous trees only.
Expr rescale_core(const Expr& e, const std::vector<int>& alpha) {
  switch (e->kind) {
    case NodeKind::Constant:
    case NodeKind::Time:
    case NodeKind::Var: return e;
    case NodeKind::Neg: return neg(rescale_core(e->a, alpha));
    case NodeKind::Add: return add(rescale_core(e->a, alpha), rescale_core(e->b, alpha));
    case NodeKind::Sub: return sub(rescale_core(e->a, alpha), rescale_core(e->b, alpha));
    case NodeKind::Mul: return mul(rescale_core(e->a, alpha), rescale_core(e->b, alpha));
    case NodeKind::Div: return div(rescale_core(e->a, alpha), rescale_core(e->b, alpha));
    case NodeKind::Pow: return pow(rescale_core(e->a, alpha), e->value);
    case NodeKind::Func: return apply(e->func, rescale_core(e->a, alpha));
  }
  return e;
}

void flatten_sum(const Expr& e, double sign, std::vector<std::pair<double, Expr>>& out) {
  switch (e->kind) {
    case NodeKind::Add:
      flatten_sum(e->a, sign, out);
      flatten_sum(e->b, sign, out);
      return;
    case NodeKind::Sub:
      flatten_sum(e->a, sign, out);
      flatten_sum(e->b, -sign, out);
      return;
    case NodeKind::Neg:
      flatten_sum(e->a, -sign, out);
      return;
    default:
      out.emplace_back(sign, e);
      return;
  }
}

// Powers of 1 - p2c. Integer exponents take the plain base; fractional
// exponents take (q + |q|)/2, which equals q on the domain q >= 0 but
// survives the -1e-17 rounding that horizon points produce (a negative
// base under a fractional power would raise a domain error).
struct QPow {
  Expr plain;
  Expr clamped;

  static QPow from(const Expr& one_minus_p2c) {
    return {one_minus_p2c,
            mul(constant(0.5), add(one_minus_p2c, apply(FuncKind::Abs, one_minus_p2c)))};
  }

  Expr operator()(double exponent) const {
    bool integral = exponent == std::rint(exponent);
    return pow(integral ? plain : clamped, exponent);
  }
};

// Substitution fallback for residual addends that are not
// weight-homogeneous: y_i -> (1-p2c)^-alpha_i x_i, times (1-p2c)^target.
// Finite off the horizon; on the horizon it may hit 0^negative.
Expr rescale_naive(const Expr& e, const std::vector<int>& alpha, double target,
                   const QPow& qpow) {
  struct Subst {
    const std::vector<int>& alpha;
    const QPow& qpow;

    Expr go(const Expr& e) {
      switch (e->kind) {
        case NodeKind::Constant:
        case NodeKind::Time: return e;
        case NodeKind::Var: {
          int a = alpha[static_cast<std::size_t>(e->var)];
          if (a == 0) return e;
          return mul(qpow(-static_cast<double>(a)), e);
        }
        case NodeKind::Neg: return neg(go(e->a));
        case NodeKind::Add: return add(go(e->a), go(e->b));
        case NodeKind::Sub: return sub(go(e->a), go(e->b));
        case NodeKind::Mul: return mul(go(e->a), go(e->b));
        case NodeKind::Div: return div(go(e->a), go(e->b));
        case NodeKind::Pow: return pow(go(e->a), e->value);
        case NodeKind::Func: return apply(e->func, go(e->a));
      }
      return e;
    }
  } subst{alpha, qpow};
  return mul(qpow(target), subst.go(e));
}

// kappa^-target * e(t, kappa^Lambda x) as a horizon-finite expression.
// Each top-level addend m of weight w contributes
// rescale_core(m) * (1-p2c)^(target - w).
Expr rescale(const Expr& e, const std::vector<int>& alpha, double target,
             const QPow& qpow, bool strict, const char* what) {
  std::vector<std::pair<double, Expr>> addends;
  flatten_sum(e, 1.0, addends);
  Expr acc = constant(0.0);
  for (auto& [sign, m] : addends) {
    if (is_constant(m, 0.0)) continue;
    auto w = weight(m, alpha);
    Expr term;
    if (w) {
      double q = target - *w;
      if (strict && std::abs(q) > 1e-9)
        throw numeric_error(std::string(what) +
                            ": declared quasi-homogeneous term has scaling weight " +
                            std::to_string(*w) + ", expected " + std::to_string(target));
      term = mul(rescale_core(m, alpha), qpow(q));
    } else {
      if (strict)
        throw numeric_error(std::string(what) +
                            ": quasi-homogeneous component is not weight-homogeneous");
      term = rescale_naive(m, alpha, target, qpow);
    }
    acc = add(acc, sign < 0 ? neg(term) : term);
  }
  return acc;
}

Expr ipow_expr(const Expr& base, long long p) { return pow(base, static_cast<double>(p)); }

}  // namespace

DesingField build(const SystemDef& sys) {
  DesingField df;
  df.sys = sys;
  df.spec = EmbeddingSpec::from(sys.sig);
  const auto& sig = sys.sig;
  const int n = sig.n;
  const double twoc = 2.0 * static_cast<double>(df.spec.c);

  Expr p2ce = constant(0.0);
  for (int i : sig.I_alpha) p2ce = add(p2ce, ipow_expr(state_var(i), 2 * df.spec.beta[i]));
  df.p2c_expr = p2ce;
  df.one_minus_p2c = sub(constant(1.0), p2ce);
  QPow qpow = QPow::from(df.one_minus_p2c);

  // 1 - (2c-1)/(2c)(1-p2c) = (1 + (2c-1) p2c)/(2c)
  df.prefactor = sub(constant(1.0), mul(constant((twoc - 1.0) / twoc), df.one_minus_p2c));
  df.g0 = mul(df.prefactor, qpow(sig.k));

  df.ftilde.resize(n);
  df.ftilde_qh.resize(n);
  for (int j = 0; j < n; ++j) {
    double target = sig.k + sig.alpha[j];
    Expr qh = rescale(sys.f_qh[j], sig.alpha, target, qpow, true, sys.states[j].c_str());
    Expr res = rescale(sys.f_res[j], sig.alpha, target, qpow, false, sys.states[j].c_str());
    df.ftilde_qh[j] = qh;
    df.ftilde[j] = add(qh, res);
  }

  Expr G = constant(0.0);
  for (int j : sig.I_alpha)
    G = add(G, mul(div(ipow_expr(state_var(j), 2 * df.spec.beta[j] - 1),
                       constant(static_cast<double>(sig.alpha[j]))),
                   df.ftilde[j]));
  df.G = G;

  df.g.resize(n);
  for (int j = 0; j < n; ++j)
    df.g[j] = sub(mul(df.prefactor, df.ftilde[j]),
                  mul(G, mul(constant(static_cast<double>(sig.alpha[j])), state_var(j))));

  std::vector<Expr> field_roots;
  field_roots.push_back(df.g0);
  for (int j = 0; j < n; ++j) field_roots.push_back(df.g[j]);
  field_roots.push_back(df.G);
  df.field_tape = Tape::compile(field_roots);

  std::vector<Expr> jac_roots;
  std::vector<Expr> gext;
  gext.push_back(df.g0);
  for (int j = 0; j < n; ++j) gext.push_back(df.g[j]);
  for (const Expr& row : gext)
    for (int v = -1; v < n; ++v) jac_roots.push_back(diff(row, v));
  df.jacobian_tape = Tape::compile(jac_roots);

  std::vector<Expr> ft_roots;
  for (int j = 0; j < n; ++j)
    for (int v = -1; v < n; ++v) ft_roots.push_back(diff(df.ftilde[j], v));
  for (int j = 0; j < n; ++j)
    for (int v = -1; v < n; ++v) ft_roots.push_back(diff(df.ftilde_qh[j], v));
  df.ftilde_jac_tape = Tape::compile(ft_roots);

  return df;
}

FieldEval::FieldEval(const DesingField& df) : df_(&df) {
  out_.resize(df.field_tape.num_outputs());
}

double FieldEval::operator()(double t, std::span<const double> x, std::span<double> gout) {
  df_->field_tape.eval(t, x, ws_, out_);
  const int n = df_->sys.sig.n;
  for (int i = 0; i <= n; ++i) gout[static_cast<std::size_t>(i)] = out_[static_cast<std::size_t>(i)];
  return out_[static_cast<std::size_t>(n) + 1];
}

FieldValue eval_field(const DesingField& df, double t, const Vector& x) {
  FieldEval fe(df);
  const int n = df.sys.sig.n;
  std::vector<double> gout(static_cast<std::size_t>(n) + 1);
  FieldValue fv;
  fv.G = fe(t, std::span<const double>(x.data(), static_cast<std::size_t>(n)), gout);
  fv.g0 = gout[0];
  fv.g = Eigen::Map<const Vector>(gout.data() + 1, n);
  fv.p2c = p2c(df.spec, x);
  return fv;
}

Matrix jacobian(const DesingField& df, double t, const Vector& x) {
  const int n = df.sys.sig.n;
  Tape::Workspace ws;
  std::vector<double> out(df.jacobian_tape.num_outputs());
  df.jacobian_tape.eval(t, std::span<const double>(x.data(), static_cast<std::size_t>(n)), ws, out);
  Matrix J(n + 1, n + 1);
  for (int r = 0; r <= n; ++r)
    for (int cidx = 0; cidx <= n; ++cidx)
      J(r, cidx) = out[static_cast<std::size_t>(r) * (n + 1) + cidx];
  return J;
}

Matrix ftilde_jacobian(const DesingField& df, double t, const Vector& x, bool qh_only) {
  const int n = df.sys.sig.n;
  Tape::Workspace ws;
  std::vector<double> out(df.ftilde_jac_tape.num_outputs());
  df.ftilde_jac_tape.eval(t, std::span<const double>(x.data(), static_cast<std::size_t>(n)), ws,
                          out);
  std::size_t base = qh_only ? static_cast<std::size_t>(n) * (n + 1) : 0;
  Matrix M(n, n + 1);
  for (int r = 0; r < n; ++r)
    for (int cidx = 0; cidx <= n; ++cidx)
      M(r, cidx) = out[base + static_cast<std::size_t>(r) * (n + 1) + cidx];
  return M;
}

EquilibriumDecomposition decompose_at_equilibrium(const DesingField& df, double t_star,
                                                  const Vector& x_star) {
  const auto& sig = df.sys.sig;
  const int n = sig.n;
  const double c = static_cast<double>(df.spec.c);

  double p = p2c(df.spec, x_star);
  if (std::abs(p - 1.0) > 1e-12)
    throw numeric_error("decomposition requested off the horizon: |p2c - 1| = " +
                        std::to_string(std::abs(p - 1.0)));
  FieldValue fv = eval_field(df, t_star, x_star);
  Vector gext(n + 1);
  gext[0] = fv.g0;
  gext.tail(n) = fv.g;
  if (gext.norm() > 1e-9)
    throw numeric_error("decomposition requested at a non-equilibrium point: ||g^ext|| = " +
                        std::to_string(gext.norm()));

  EquilibriumDecomposition dec;
  dec.t_star = t_star;
  dec.x_star = x_star;
  dec.C_star = fv.G;
  dec.k = sig.k;
  dec.c = df.spec.c;

  dec.v_ext = Vector::Zero(n + 1);
  for (int i = 0; i < n; ++i) dec.v_ext[i + 1] = sig.alpha[i] * x_star[i];

  dec.Dp_ext = Vector::Zero(n + 1);
  for (int i : sig.I_alpha)
    dec.Dp_ext[i + 1] =
        static_cast<double>(df.spec.beta[i]) / c * std::pow(x_star[i], 2.0 * df.spec.beta[i] - 1.0);

  dec.P_ext = dec.v_ext * dec.Dp_ext.transpose();

  Matrix Dft = ftilde_jacobian(df, t_star, x_star, /*qh_only=*/false);
  Matrix Dft_qh = ftilde_jacobian(df, t_star, x_star, /*qh_only=*/true);
  dec.qh_jacobian_gap = (Dft - Dft_qh).cwiseAbs().maxCoeff();

  Matrix Lam_ext = Matrix::Zero(n + 1, n + 1);
  for (int i = 0; i < n; ++i) Lam_ext(i + 1, i + 1) = sig.alpha[i];

  dec.Ag_ext = -dec.C_star * Lam_ext;
  dec.Ag_ext.block(1, 0, n, n + 1) += Dft;

  dec.Bg_ext = -dec.P_ext * (dec.Ag_ext + dec.C_star * Matrix::Identity(n + 1, n + 1));

  dec.Ares = Matrix::Zero(n + 1, n + 1);
  if (sig.k == 1.0)
    dec.Ares.block(0, 1, 1, n) = -2.0 * c * dec.Dp_ext.tail(n).transpose();

  dec.Dg = jacobian(df, t_star, x_star);
  dec.Dt_g = dec.Dg.block(1, 0, n, 1);
  dec.Dx_g = dec.Dg.block(1, 1, n, n);

  dec.decomposition_residual =
      (dec.Ag_ext + dec.Bg_ext + dec.Ares - dec.Dg).cwiseAbs().maxCoeff();
  if (dec.decomposition_residual > 1e-7)
    throw numeric_error(
        "Jacobian decomposition residual " + std::to_string(dec.decomposition_residual) +
        " exceeds 1e-7; the declared quasi-homogeneous/residual split looks inconsistent");
  return dec;
}

}  // namespace blowup
