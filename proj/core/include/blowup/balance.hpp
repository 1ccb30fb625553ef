#pragma once

#include "blowup/desing.hpp"
#include "blowup/system.hpp"
#include "blowup/types.hpp"

namespace blowup {

// A^ext = -(1/k) Lambda^ext + D f^ext_qh(t*, Y0). Row 0 is identically
// zero; the spectrum is {0} plus the spectrum of the lower-right block A.
struct BlowupPowerMatrix {
  Matrix A_ext;
  Matrix A;
  Vector Dt_col;  // D_t f_qh(t*, Y0)
  ComplexVector eig_A;        // eigenvalues of A
  ComplexMatrix eigvec_A;     // columns, matching eig_A
};

struct GridSpec {
  double extent = 3.0;   // uniform grid over [-extent, extent]^n
  int per_axis = 5;
  long long max_starts = 100000;
};

// -(1/k) Lambda Y + f_qh(t, Y); the time row is omitted (identically 0).
Vector balance_residual(const SystemDef& sys, double t, const Vector& Y);

// Damped multistart Newton over the seeds plus a uniform grid. Converged
// points are deduplicated; near-zero roots are discarded as trivial.
// Returns roots sorted lexicographically; empty is a valid outcome.
std::vector<BalanceRoot> find_roots(const SystemDef& sys, double t,
                                    std::span<const Vector> seeds, const GridSpec& grid = {});

// x* = r^-Lambda Y0 with r = p_alpha(Y0); verifies the point is a horizon
// equilibrium and that C* = G(t*, x*) = (1/k) r^-k.
HorizonEquilibrium root_to_equilibrium(const DesingField& df, const BalanceRoot& root);

// Y0 = r^Lambda x* with r = (k C*)^(-1/k). Throws degenerate_error when
// C* <= 1e-12.
BalanceRoot equilibrium_to_root(const DesingField& df, double t_star, const Vector& x_star);

// Maps an approximate equilibrium (typically a converged trajectory
// endpoint) through the same scaling and polishes the result by Newton.
// Unlike equilibrium_to_root this does not require the input to satisfy
// the bijection identities up front; ill-conditioned equilibria can
// amplify a 1e-12 field residual well past the strict gates.
BalanceRoot root_near_equilibrium(const DesingField& df, double t, const Vector& x_approx);

BlowupPowerMatrix power_matrix(const SystemDef& sys, const BalanceRoot& root);

}  // namespace blowup
