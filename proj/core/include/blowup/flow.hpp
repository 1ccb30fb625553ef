#pragma once

#include <iosfwd>

#include "blowup/desing.hpp"
#include "blowup/types.hpp"

namespace blowup {

struct TrajectorySample {
  double tau = 0.0;
  double t = 0.0;
  Vector x;
  double p2c = 0.0;
  double G = 0.0;
};

struct Trajectory {
  enum class Status { Converged, MaxSteps, DomainError };

  double h = 1e-3;
  Status status = Status::MaxSteps;
  long long steps = 0;
  int stride = 1;                        // decimation of stored samples
  std::vector<TrajectorySample> samples;

  double t0 = 0.0;
  double tau_end = 0.0;
  double t_end = 0.0;
  Vector x_end;
  double quad = 0.0;            // full-resolution trapezoid of g_0 over tau
  double integrand_end = 0.0;   // g_0 at the final sample
  double C_end = 0.0;           // G at the final sample
  double max_step_t_gap = 0.0;  // per-step |Delta t_RK4 - Delta t_trapz|
  std::string error;
};

// Classical fixed-step RK4 on (t, x)' = g^ext. Overshoot past the horizon
// up to 1e-9 in p2c is renormalized back; larger overshoot aborts. Stops
// when ||g^ext|| < 1e-12 and 1 - p2c < 1e-10, or tau exceeds tau_max.
Trajectory integrate(const DesingField& df, double t0, const Vector& x0, double h,
                     double tau_max);

struct TmaxResult {
  double value = 0.0;            // via the quadrature route
  double via_quadrature = 0.0;   // t0 + trapz + exponential tail
  double via_t_limit = 0.0;      // t_end + exponential tail
  double tail = 0.0;
  double route_gap = 0.0;
};

// Blow-up time from the trapezoid of (1/2c)(1 + (2c-1) p2c)(1 - p2c)^k
// plus the exponential tail integrand_end / (k C*); cross-checked against
// the limit of the trajectory's own t component.
TmaxResult t_max(const DesingField& df, const Trajectory& traj);

struct RateFitComponent {
  int component = 0;
  bool fitted = false;
  double slope = 0.0;
  double slope_expected = 0.0;     // -alpha_i / k
  double coefficient = 0.0;        // fixed-slope estimate of |Y0_i|
  double coefficient_expected = 0.0;
  bool pass = false;
};

struct RateFitReport {
  bool conclusive = false;
  bool pass = false;
  int tail_samples = 0;
  double theta_lo = 0.0, theta_hi = 0.0;
  std::vector<RateFitComponent> components;
};

// Reconstructs y(t) on a tail window of theta = t_max - t and fits
// log|y_i| against log theta. Components with Y0_i = 0 are skipped.
// Slope must match -alpha_i/k within 0.05 and the coefficient |Y0_i|
// within 5%. Fewer than 20 tail samples leaves the report inconclusive.
RateFitReport rate_check(const DesingField& df, const Trajectory& traj,
                         const HorizonEquilibrium& eq, const BalanceRoot& root);

// CSV export: header tau,t,x1,...,xn,p2c,G,kappa_inv; 17 significant
// digits; LF line endings.
void write_trajectory_csv(std::ostream& os, const DesingField& df, const Trajectory& traj);

}  // namespace blowup
