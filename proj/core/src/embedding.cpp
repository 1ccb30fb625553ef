#include "blowup/embedding.hpp"

#include <cmath>
#include <numeric>

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

}  // namespace

EmbeddingSpec EmbeddingSpec::from(const QHSignature& sig) {
  EmbeddingSpec spec;
  spec.sig = sig;
  long long c = 1;
  for (int i : sig.I_alpha) c = std::lcm(c, static_cast<long long>(sig.alpha[i]));
  spec.c = c;
  spec.beta.assign(sig.alpha.size(), 0);
  for (int i : sig.I_alpha) spec.beta[i] = c / sig.alpha[i];
  return spec;
}

double p2c(const EmbeddingSpec& spec, const Vector& x) {
  double s = 0.0;
  for (int i : spec.sig.I_alpha) s += ipow(x[i], 2 * spec.beta[i]);
  return s;
}

double p_alpha(const EmbeddingSpec& spec, const Vector& x) {
  return std::pow(p2c(spec, x), 1.0 / (2.0 * static_cast<double>(spec.c)));
}

EmbeddedPoint embed(const EmbeddingSpec& spec, double t, const Vector& y) {
  const long long tc = 2 * spec.c;
  double rhs = 0.0;
  for (int i : spec.sig.I_alpha) rhs += ipow(y[i], 2 * spec.beta[i]);

  double kappa = 1.0;
  if (rhs > 0.0) {
    // kappa^2c - kappa^(2c-1) is 0 at kappa = 1 and strictly increasing,
    // so bracket then bisect, with a Newton polish.
    auto phi = [&](double kap) { return ipow(kap, tc) - ipow(kap, tc - 1); };
    double lo = 1.0;
    double hi = 1.0 + std::max(1.0, std::pow(rhs, 1.0 / static_cast<double>(tc)));
    while (phi(hi) < rhs) hi = 1.0 + 2.0 * (hi - 1.0);
    for (int it = 0; it < 200 && hi - lo > 1e-16 * hi; ++it) {
      double mid = 0.5 * (lo + hi);
      (phi(mid) < rhs ? lo : hi) = mid;
    }
    kappa = 0.5 * (lo + hi);
    for (int it = 0; it < 8; ++it) {
      double f = phi(kappa) - rhs;
      double df = tc * ipow(kappa, tc - 1) - (tc - 1) * ipow(kappa, tc - 2);
      double step = f / df;
      kappa -= step;
      if (kappa < 1.0) kappa = 1.0;
      if (std::abs(f) <= 1e-14 * (1.0 + rhs) && std::abs(step) <= 1e-15 * kappa) break;
    }
  }

  EmbeddedPoint pt;
  pt.t = t;
  pt.x = y;
  for (int i : spec.sig.I_alpha) pt.x[i] = y[i] * ipow(kappa, -spec.sig.alpha[i]);
  pt.kappa_inv = 1.0 / kappa;
  pt.p2c = rhs > 0.0 ? 1.0 - pt.kappa_inv : 0.0;
  return pt;
}

std::pair<double, Vector> unembed(const EmbeddingSpec& spec, const EmbeddedPoint& pt) {
  if (pt.p2c >= 1.0 - 1e-15)
    throw numeric_error("cannot map a horizon point back to finite coordinates");
  double kappa = 1.0 / (1.0 - pt.p2c);
  Vector y = pt.x;
  for (int i : spec.sig.I_alpha) y[i] = pt.x[i] * ipow(kappa, spec.sig.alpha[i]);
  return {pt.t, y};
}

Vector project_to_horizon(const EmbeddingSpec& spec, Vector x) {
  double cur = p2c(spec, x);
  if (cur <= 0.0) throw numeric_error("cannot project the origin onto the horizon");
  // Solve sum_i (s x_i)^(2 beta_i) = 1 for s > 0; the left side is strictly
  // increasing in s.
  double s = 1.0;
  for (int it = 0; it < 100; ++it) {
    double f = -1.0, df = 0.0;
    for (int i : spec.sig.I_alpha) {
      double term = ipow(s * x[i], 2 * spec.beta[i]);
      f += term;
      df += 2.0 * static_cast<double>(spec.beta[i]) * term / s;
    }
    double step = f / df;
    s -= step;
    if (std::abs(step) <= 1e-16 * s) break;
  }
  for (int i : spec.sig.I_alpha) x[i] *= s;
  return x;
}

}  // namespace blowup
