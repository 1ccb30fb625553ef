#include "blowup/balance.hpp"

#include <algorithm>
#include <cmath>

namespace blowup {

namespace {

double ipow(double base, long long p) {
  bool inv = p < 0;
  unsigned long long q = static_cast<unsigned long long>(inv ? -p : p);
  double acc = 1.0, b = base;
  while (q) {
    if (q & 1ull) acc *= b;
    b *= b;
    q >>= 1;
  }
  return inv ? 1.0 / acc : acc;
}

struct BalanceNewton {
  const SystemDef& sys;
  Tape tape;  // outputs: f_qh (n), then d f_qh / d x (n*n row-major)
  Tape::Workspace ws;
  std::vector<double> out;

  explicit BalanceNewton(const SystemDef& s) : sys(s) {
    const int n = s.sig.n;
    std::vector<Expr> roots;
    for (int i = 0; i < n; ++i) roots.push_back(s.f_qh[i]);
    for (int i = 0; i < n; ++i)
      for (int l = 0; l < n; ++l) roots.push_back(diff(s.f_qh[i], l));
    tape = Tape::compile(roots);
    out.resize(tape.num_outputs());
  }

  // F(Y) and J(Y) = -(1/k) Lambda + D f_qh; returns false on domain error.
  bool residual(double t, const Vector& Y, Vector& F, Matrix* J) {
    const int n = sys.sig.n;
    try {
      tape.eval(t, std::span<const double>(Y.data(), static_cast<std::size_t>(n)), ws, out);
    } catch (const domain_error&) {
      return false;
    }
    for (int i = 0; i < n; ++i) {
      if (!std::isfinite(out[static_cast<std::size_t>(i)])) return false;
      F[i] = -sys.sig.alpha[i] / sys.sig.k * Y[i] + out[static_cast<std::size_t>(i)];
    }
    if (J) {
      for (int i = 0; i < n; ++i)
        for (int l = 0; l < n; ++l) {
          double d = out[static_cast<std::size_t>(n) + static_cast<std::size_t>(i) * n + l];
          if (!std::isfinite(d)) return false;
          (*J)(i, l) = d - (i == l ? sys.sig.alpha[i] / sys.sig.k : 0.0);
        }
    }
    return true;
  }

  // Returns true when converged to ||F|| < 1e-12.
  bool solve(double t, Vector& Y) {
    const int n = sys.sig.n;
    Vector F(n), Ytry(n), Ftry(n);
    Matrix J(n, n);
    if (!residual(t, Y, F, nullptr)) return false;
    for (int it = 0; it < 100; ++it) {
      if (F.norm() < 1e-12) return true;
      if (!residual(t, Y, F, &J)) return false;
      Eigen::FullPivLU<Matrix> lu(J);
      if (!lu.isInvertible()) return false;
      Vector step = lu.solve(F);
      double lambda = 1.0;
      bool improved = false;
      for (int halve = 0; halve <= 30; ++halve) {
        Ytry = Y - lambda * step;
        if (residual(t, Ytry, Ftry, nullptr) && Ftry.norm() < F.norm()) {
          improved = true;
          break;
        }
        lambda *= 0.5;
      }
      if (!improved) return false;
      Y = Ytry;
      F = Ftry;
      if (Y.norm() > 1e8) return false;
    }
    return F.norm() < 1e-12;
  }
};

}  // namespace

Vector balance_residual(const SystemDef& sys, double t, const Vector& Y) {
  const int n = sys.sig.n;
  Vector F(n);
  for (int i = 0; i < n; ++i) {
    std::span<const double> yv(Y.data(), static_cast<std::size_t>(n));
    F[i] = -sys.sig.alpha[i] / sys.sig.k * Y[i] + eval(sys.f_qh[i], t, yv);
  }
  return F;
}

std::vector<BalanceRoot> find_roots(const SystemDef& sys, double t,
                                    std::span<const Vector> seeds, const GridSpec& grid) {
  const int n = sys.sig.n;
  BalanceNewton newton(sys);
  EmbeddingSpec spec = EmbeddingSpec::from(sys.sig);

  std::vector<Vector> starts(seeds.begin(), seeds.end());
  long long total = 1;
  for (int i = 0; i < n && total <= grid.max_starts; ++i) total *= grid.per_axis;
  if (total <= grid.max_starts) {
    std::vector<int> idx(n, 0);
    for (long long m = 0; m < total; ++m) {
      Vector Y(n);
      long long rest = m;
      for (int i = 0; i < n; ++i) {
        int q = static_cast<int>(rest % grid.per_axis);
        rest /= grid.per_axis;
        Y[i] = grid.per_axis == 1
                   ? 0.0
                   : -grid.extent + 2.0 * grid.extent * q / static_cast<double>(grid.per_axis - 1);
      }
      starts.push_back(Y);
    }
  }

  std::vector<Vector> found;
  for (Vector Y : starts) {
    if (!newton.solve(t, Y)) continue;
    if (Y.norm() < 1e-8) continue;  // trivial root
    found.push_back(Y);
  }

  std::sort(found.begin(), found.end(), [](const Vector& a, const Vector& b) {
    for (int i = 0; i < a.size(); ++i) {
      if (a[i] < b[i] - 1e-12) return true;
      if (a[i] > b[i] + 1e-12) return false;
    }
    return false;
  });
  std::vector<Vector> unique;
  for (const Vector& Y : found) {
    bool dup = false;
    for (const Vector& K : unique)
      if ((Y - K).lpNorm<Eigen::Infinity>() <= 1e-8 * std::max(1.0, K.lpNorm<Eigen::Infinity>())) {
        dup = true;
        break;
      }
    if (!dup) unique.push_back(Y);
  }

  std::vector<BalanceRoot> roots;
  for (const Vector& Y : unique) {
    BalanceRoot r;
    r.t_star = t;
    r.Y0 = Y;
    r.residual_norm = balance_residual(sys, t, Y).norm();
    r.r_Y0 = p_alpha(spec, Y);
    roots.push_back(std::move(r));
  }
  return roots;
}

HorizonEquilibrium root_to_equilibrium(const DesingField& df, const BalanceRoot& root) {
  const auto& sig = df.sys.sig;
  const int n = sig.n;
  if (root.Y0.norm() < 1e-8) throw numeric_error("trivial balance root has no equilibrium");

  double r = p_alpha(df.spec, root.Y0);
  Vector x(n);
  for (int i = 0; i < n; ++i) x[i] = root.Y0[i] * std::pow(r, -static_cast<double>(sig.alpha[i]));

  double p = p2c(df.spec, x);
  if (std::abs(p - 1.0) > 1e-12)
    throw numeric_error("mapped balance root misses the horizon: p2c = " + std::to_string(p));

  FieldValue fv = eval_field(df, root.t_star, x);
  Vector gext(n + 1);
  gext[0] = fv.g0;
  gext.tail(n) = fv.g;
  if (gext.norm() > 1e-9)
    throw numeric_error("mapped balance root is not an equilibrium: ||g^ext|| = " +
                        std::to_string(gext.norm()));

  double C = fv.G;
  double expected = std::pow(r, -sig.k) / sig.k;
  if (std::abs(C - expected) > 1e-9 * (1.0 + std::abs(C)))
    throw numeric_error("C* = " + std::to_string(C) + " disagrees with (1/k) r^-k = " +
                        std::to_string(expected));

  HorizonEquilibrium eq;
  eq.t_star = root.t_star;
  eq.x_star = x;
  eq.C_star = C;
  eq.r = r;
  eq.root = root;
  return eq;
}

BalanceRoot equilibrium_to_root(const DesingField& df, double t_star, const Vector& x_star) {
  const auto& sig = df.sys.sig;
  const int n = sig.n;
  FieldValue fv = eval_field(df, t_star, x_star);
  double C = fv.G;
  if (C <= 1e-12)
    throw degenerate_error("equilibrium has C* = " + std::to_string(C) +
                           " <= 0; the balance correspondence degenerates");
  double r = std::pow(sig.k * C, -1.0 / sig.k);
  BalanceRoot root;
  root.t_star = t_star;
  root.Y0 = Vector(n);
  for (int i = 0; i < n; ++i)
    root.Y0[i] = x_star[i] * std::pow(r, static_cast<double>(sig.alpha[i]));
  root.r_Y0 = p_alpha(df.spec, root.Y0);
  root.residual_norm = balance_residual(df.sys, t_star, root.Y0).norm();
  if (root.residual_norm > 1e-10 * (1.0 + root.Y0.norm()))
    throw numeric_error("balance residual " + std::to_string(root.residual_norm) +
                        " too large for the mapped equilibrium");
  return root;
}

BalanceRoot root_near_equilibrium(const DesingField& df, double t, const Vector& x_approx) {
  const auto& sig = df.sys.sig;
  const int n = sig.n;
  FieldValue fv = eval_field(df, t, x_approx);
  if (fv.G <= 1e-12)
    throw degenerate_error("approximate equilibrium has C* = " + std::to_string(fv.G) +
                           " <= 0; the balance correspondence degenerates");
  double r = std::pow(sig.k * fv.G, -1.0 / sig.k);
  Vector Y(n);
  for (int i = 0; i < n; ++i) Y[i] = x_approx[i] * std::pow(r, static_cast<double>(sig.alpha[i]));

  BalanceNewton newton(df.sys);
  if (!newton.solve(t, Y))
    throw numeric_error("Newton polish failed near the approximate equilibrium");
  if (Y.norm() < 1e-8) throw numeric_error("polish collapsed onto the trivial root");

  BalanceRoot root;
  root.t_star = t;
  root.Y0 = Y;
  root.residual_norm = balance_residual(df.sys, t, Y).norm();
  root.r_Y0 = p_alpha(df.spec, Y);
  return root;
}

BlowupPowerMatrix power_matrix(const SystemDef& sys, const BalanceRoot& root) {
  const auto& sig = sys.sig;
  const int n = sig.n;
  BlowupPowerMatrix pm;
  pm.A_ext = Matrix::Zero(n + 1, n + 1);
  pm.A = Matrix::Zero(n, n);
  pm.Dt_col = Vector::Zero(n);

  std::span<const double> yv(root.Y0.data(), static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    pm.Dt_col[i] = eval(diff(sys.f_qh[i], -1), root.t_star, yv);
    for (int l = 0; l < n; ++l)
      pm.A(i, l) = eval(diff(sys.f_qh[i], l), root.t_star, yv) -
                   (i == l ? sig.alpha[i] / sig.k : 0.0);
  }
  pm.A_ext.block(1, 0, n, 1) = pm.Dt_col;
  pm.A_ext.block(1, 1, n, n) = pm.A;

  Eigen::EigenSolver<Matrix> es(pm.A);
  pm.eig_A = es.eigenvalues();
  pm.eigvec_A = es.eigenvectors();
  return pm;
}

}  // namespace blowup
