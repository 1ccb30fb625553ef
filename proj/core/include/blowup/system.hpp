#pragma once

#include <random>
#include <string>
#include <vector>

#include "blowup/expr.hpp"
#include "blowup/types.hpp"

namespace blowup {

struct EmbeddingSpec;

// Type alpha and order k+1 of an asymptotically quasi-homogeneous field.
// The time slot is implicit and always carries exponent 0.
struct QHSignature {
  int n = 0;
  std::vector<int> alpha;    // n nonnegative integers, not all zero
  double k = 1.0;            // order = k + 1, k >= 1
  std::vector<int> I_alpha;  // indices with alpha_i > 0

  static QHSignature make(std::vector<int> alpha, double k);
};

// The user's system split into the exactly quasi-homogeneous component and
// the lower-order residual: y' = f_qh(t, y) + f_res(t, y). The extended
// system prepends the time row with f_0 = 1 in the residual and zero in
// the quasi-homogeneous part.
struct SystemDef {
  std::string name;
  std::vector<std::string> states;
  QHSignature sig;
  std::vector<Expr> f_qh;
  std::vector<Expr> f_res;
};

struct ComponentCheck {
  int component = 0;
  bool pass = false;
  double worst_residual = 0.0;
  std::string note;
};

struct ValidationReport {
  bool pass = false;
  std::vector<ComponentCheck> scaling;  // per-component scaling law checks
  std::vector<ComponentCheck> euler;    // per-component Euler identity checks
};

struct ResidualOrderReport {
  bool pass = false;
  // Fitted decay exponent of kappa^-(k+alpha_i) f_res_i(t, kappa^Lambda x)
  // in kappa; pass requires exponent <= -1 - 1e-3 (or an identically zero
  // residual component).
  std::vector<ComponentCheck> components;
};

// Checks the declared quasi-homogeneity at random points: the scaling law
// |f_i(t, s^Lambda y) - s^(k+alpha_i) f_i(t, y)| <= 1e-9 (1 + |f_i(t, y)|)
// and the Euler identity Df(y) Lambda y = (kI + Lambda) f(y).
ValidationReport validate_qh(const SystemDef& sys, int samples,
                             std::span<const double> scales, std::mt19937_64& rng);

// Fits the decay order of the residual near the horizon by log-log
// regression over a kappa ladder. Needs the embedding for kappa^Lambda.
ResidualOrderReport validate_res(const SystemDef& sys, const EmbeddingSpec& spec,
                                 int samples, std::mt19937_64& rng);

}  // namespace blowup
