#pragma once

#include "blowup/system.hpp"
#include "blowup/types.hpp"

namespace blowup {

// Point inside the embedded disk p_alpha(x) <= 1. p2c caches p_alpha^2c,
// kappa_inv caches 1 - p2c = 1/kappa. The horizon is p2c = 1.
struct EmbeddedPoint {
  double t = 0.0;
  Vector x;
  double p2c = 0.0;
  double kappa_inv = 1.0;
};

// beta exponents and c with alpha_i beta_i = c for i in I_alpha, c the
// least common multiple of the positive alpha_i.
struct EmbeddingSpec {
  QHSignature sig;
  std::vector<long long> beta;  // 0 outside I_alpha
  long long c = 1;

  static EmbeddingSpec from(const QHSignature& sig);
};

// Sum over I_alpha of x_i^(2 beta_i); the 2c-th power of p_alpha.
double p2c(const EmbeddingSpec& spec, const Vector& x);
double p_alpha(const EmbeddingSpec& spec, const Vector& x);

// Forward map: solves kappa^2c - kappa^(2c-1) = p_alpha(y)^2c for the
// unique kappa >= 1 and returns x_j = kappa^-alpha_j y_j.
EmbeddedPoint embed(const EmbeddingSpec& spec, double t, const Vector& y);

// Inverse map; requires p2c < 1 strictly.
std::pair<double, Vector> unembed(const EmbeddingSpec& spec, const EmbeddedPoint& pt);

// Scales the I_alpha components of x by the positive factor that puts the
// point exactly on the horizon. Used for horizon sampling and for the
// integrator's overshoot renormalization.
Vector project_to_horizon(const EmbeddingSpec& spec, Vector x);

}  // namespace blowup
