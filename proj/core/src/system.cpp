#include "blowup/system.hpp"

#include <cmath>

#include "blowup/embedding.hpp"

namespace blowup {

QHSignature QHSignature::make(std::vector<int> alpha, double k) {
  QHSignature sig;
  sig.n = static_cast<int>(alpha.size());
  sig.alpha = std::move(alpha);
  sig.k = k;
  bool any = false;
  for (int i = 0; i < sig.n; ++i) {
    if (sig.alpha[i] < 0) throw numeric_error("type exponents must be nonnegative");
    if (sig.alpha[i] > 0) {
      sig.I_alpha.push_back(i);
      any = true;
    }
  }
  if (!any) throw numeric_error("type exponents must not all be zero");
  if (!(k >= 1.0)) throw numeric_error("order k must satisfy k >= 1");
  return sig;
}

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

// Least-squares slope of (u_i, v_i).
double fit_slope(const std::vector<double>& u, const std::vector<double>& v) {
  double mu = 0.0, mv = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    mu += u[i];
    mv += v[i];
  }
  mu /= static_cast<double>(u.size());
  mv /= static_cast<double>(u.size());
  double suu = 0.0, suv = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    suu += (u[i] - mu) * (u[i] - mu);
    suv += (u[i] - mu) * (v[i] - mv);
  }
  return suv / suu;
}

}  // namespace

ValidationReport validate_qh(const SystemDef& sys, int samples,
                             std::span<const double> scales, std::mt19937_64& rng) {
  const auto& sig = sys.sig;
  const int n = sig.n;
  std::uniform_real_distribution<double> box(-2.0, 2.0);

  std::vector<Expr> dqh(static_cast<std::size_t>(n) * n);
  for (int i = 0; i < n; ++i)
    for (int l = 0; l < n; ++l) dqh[static_cast<std::size_t>(i) * n + l] = diff(sys.f_qh[i], l);

  ValidationReport rep;
  rep.scaling.resize(n);
  rep.euler.resize(n);
  for (int i = 0; i < n; ++i) {
    rep.scaling[i] = {i, true, 0.0, ""};
    rep.euler[i] = {i, true, 0.0, ""};
  }

  for (int s = 0; s < samples; ++s) {
    std::vector<double> y(n), ys(n), f(n), fs(n);
    double t = 0.0;
    bool ok = false;
    for (int attempt = 0; attempt < 100 && !ok; ++attempt) {
      t = box(rng);
      for (int i = 0; i < n; ++i) y[i] = box(rng);
      try {
        for (int i = 0; i < n; ++i) f[i] = eval(sys.f_qh[i], t, y);
        ok = true;
      } catch (const domain_error&) {
      }
    }
    if (!ok) {
      for (int i = 0; i < n; ++i) {
        rep.scaling[i].pass = false;
        rep.scaling[i].note = "could not sample an admissible point";
      }
      break;
    }

    for (double sc : scales) {
      for (int i = 0; i < n; ++i) ys[i] = ipow(sc, sig.alpha[i]) * y[i];
      bool sample_ok = true;
      try {
        for (int i = 0; i < n; ++i) fs[i] = eval(sys.f_qh[i], t, ys);
      } catch (const domain_error&) {
        sample_ok = false;
      }
      if (!sample_ok) continue;
      for (int i = 0; i < n; ++i) {
        double expect = std::pow(sc, sig.k + sig.alpha[i]) * f[i];
        double resid = std::abs(fs[i] - expect) / (1.0 + std::abs(expect));
        rep.scaling[i].worst_residual = std::max(rep.scaling[i].worst_residual, resid);
        if (resid > 1e-9) rep.scaling[i].pass = false;
      }
    }

    // Euler identity: sum_l alpha_l y_l df_i/dy_l = (k + alpha_i) f_i.
    for (int i = 0; i < n; ++i) {
      double lhs = 0.0;
      try {
        for (int l = 0; l < n; ++l)
          if (sig.alpha[l] != 0)
            lhs += sig.alpha[l] * y[l] * eval(dqh[static_cast<std::size_t>(i) * n + l], t, y);
      } catch (const domain_error&) {
        continue;
      }
      double rhs = (sig.k + sig.alpha[i]) * f[i];
      double resid = std::abs(lhs - rhs) / (1.0 + std::abs(rhs));
      rep.euler[i].worst_residual = std::max(rep.euler[i].worst_residual, resid);
      if (resid > 1e-9) rep.euler[i].pass = false;
    }
  }

  rep.pass = true;
  for (int i = 0; i < n; ++i) rep.pass = rep.pass && rep.scaling[i].pass && rep.euler[i].pass;
  return rep;
}

ResidualOrderReport validate_res(const SystemDef& sys, const EmbeddingSpec& spec,
                                 int samples, std::mt19937_64& rng) {
  const auto& sig = sys.sig;
  const int n = sig.n;
  std::uniform_real_distribution<double> box(-1.0, 1.0);
  std::uniform_real_distribution<double> tbox(-2.0, 2.0);

  constexpr int ladder = 7;
  std::array<double, ladder> kappas{};
  for (int j = 0; j < ladder; ++j)
    kappas[j] = std::pow(10.0, 3.0 + 3.0 * j / static_cast<double>(ladder - 1));

  ResidualOrderReport rep;
  rep.components.resize(n);
  for (int i = 0; i < n; ++i)
    rep.components[i] = {i, true, -std::numeric_limits<double>::infinity(), ""};

  for (int s = 0; s < samples; ++s) {
    Vector dir(n);
    bool have_dir = false;
    for (int attempt = 0; attempt < 100 && !have_dir; ++attempt) {
      for (int i = 0; i < n; ++i) dir[i] = box(rng);
      if (p2c(spec, dir) > 1e-12) have_dir = true;
    }
    if (!have_dir) continue;
    Vector xh = project_to_horizon(spec, dir);
    double t = tbox(rng);

    std::vector<std::vector<double>> logf(n);
    std::vector<double> logk;
    for (double kap : kappas) {
      // Scale the horizon direction inward so that p2c = 1 - 1/kappa; for a
      // horizon point x with p2c = 1 the map x -> u^Lambda_beta x is
      // monotone, solved the same way as the horizon projection.
      Vector x = xh;
      {
        double target = 1.0 - 1.0 / kap;
        double sc = 1.0;
        for (int it = 0; it < 100; ++it) {
          double f = -target, df = 0.0;
          for (int i : sig.I_alpha) {
            double term = ipow(sc * x[i], 2 * spec.beta[i]);
            f += term;
            df += 2.0 * static_cast<double>(spec.beta[i]) * term / sc;
          }
          double step = f / df;
          sc -= step;
          if (std::abs(step) <= 1e-16 * sc) break;
        }
        for (int i : sig.I_alpha) x[i] *= sc;
      }
      std::vector<double> y(n);
      for (int i = 0; i < n; ++i) y[i] = ipow(kap, sig.alpha[i]) * x[i];
      bool ok = true;
      std::vector<double> vals(n);
      try {
        for (int i = 0; i < n; ++i)
          vals[i] = std::pow(kap, -(sig.k + sig.alpha[i])) * eval(sys.f_res[i], t, y);
      } catch (const domain_error&) {
        ok = false;
      }
      if (!ok) continue;
      bool finite = true;
      for (int i = 0; i < n; ++i) finite = finite && std::isfinite(vals[i]);
      if (!finite) continue;
      logk.push_back(std::log(kap));
      for (int i = 0; i < n; ++i)
        logf[i].push_back(std::abs(vals[i]) > 1e-280 ? std::log(std::abs(vals[i]))
                                                      : std::numeric_limits<double>::quiet_NaN());
    }

    for (int i = 0; i < n; ++i) {
      std::vector<double> u, v;
      for (std::size_t j = 0; j < logk.size(); ++j)
        if (std::isfinite(logf[i][j])) {
          u.push_back(logk[j]);
          v.push_back(logf[i][j]);
        }
      if (u.empty()) continue;  // identically zero residual: trivially fine
      if (u.size() < 3) {
        rep.components[i].pass = false;
        rep.components[i].note = "regression failed: fewer than 3 valid ladder samples";
        continue;
      }
      double slope = fit_slope(u, v);
      rep.components[i].worst_residual = std::max(rep.components[i].worst_residual, slope);
      if (slope > -1.0 - 1e-3) {
        rep.components[i].pass = false;
        rep.components[i].note = "residual decays too slowly";
      }
    }
  }

  for (int i = 0; i < n; ++i)
    if (rep.components[i].pass && !std::isfinite(rep.components[i].worst_residual))
      rep.components[i].note = "residual identically zero on all samples";

  rep.pass = true;
  for (int i = 0; i < n; ++i) rep.pass = rep.pass && rep.components[i].pass;
  return rep;
}

}  // namespace blowup
