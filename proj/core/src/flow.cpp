#include "blowup/flow.hpp"

#include <charconv>
#include <cmath>
#include <ostream>

namespace blowup {

namespace {

constexpr std::size_t kMaxStoredSamples = 200000;

double integrand_of(double p2c_val, double twoc, double k) {
  double q = 1.0 - p2c_val;
  return (1.0 + (twoc - 1.0) * p2c_val) / twoc * std::pow(q < 0.0 ? 0.0 : q, k);
}

}  // namespace

Trajectory integrate(const DesingField& df, double t0, const Vector& x0, double h,
                     double tau_max) {
  const auto& sig = df.sys.sig;
  const int n = sig.n;
  const double twoc = 2.0 * static_cast<double>(df.spec.c);

  double p0 = p2c(df.spec, x0);
  if (p0 > 1.0 + 1e-9)
    throw numeric_error("initial point lies outside the closed disk: p2c = " + std::to_string(p0));

  Trajectory traj;
  traj.h = h;
  traj.t0 = t0;
  traj.stride = 1;

  FieldEval fe(df);
  std::vector<double> z(static_cast<std::size_t>(n) + 1);
  z[0] = t0;
  for (int i = 0; i < n; ++i) z[static_cast<std::size_t>(i) + 1] = x0[i];

  std::vector<double> k1(n + 1), k2(n + 1), k3(n + 1), k4(n + 1), ztmp(n + 1);

  auto state_x = [&](const std::vector<double>& zz) {
    return std::span<const double>(zz.data() + 1, static_cast<std::size_t>(n));
  };

  double Gcur = fe(z[0], state_x(z), k1);  // k1 reused as scratch for g^ext
  double pcur = p2c(df.spec, Eigen::Map<const Vector>(z.data() + 1, n));
  double integrand_prev = integrand_of(pcur, twoc, sig.k);

  auto push_sample = [&](double tau) {
    if (traj.steps % traj.stride != 0) return;
    TrajectorySample s;
    s.tau = tau;
    s.t = z[0];
    s.x = Eigen::Map<const Vector>(z.data() + 1, n);
    s.p2c = pcur;
    s.G = Gcur;
    traj.samples.push_back(std::move(s));
    if (traj.samples.size() > kMaxStoredSamples) {
      std::vector<TrajectorySample> kept;
      kept.reserve(traj.samples.size() / 2 + 1);
      for (std::size_t i = 0; i < traj.samples.size(); i += 2) kept.push_back(traj.samples[i]);
      traj.samples.swap(kept);
      traj.stride *= 2;
    }
  };

  double tau = 0.0;
  push_sample(tau);

  auto gnorm = [&](std::span<const double> g) {
    double s = 0.0;
    for (double v : g) s += v * v;
    return std::sqrt(s);
  };

  // Initial point may already satisfy the convergence criteria (a horizon
  // equilibrium): then zero steps are taken.
  if (gnorm(k1) < 1e-12 && 1.0 - pcur < 1e-10) {
    traj.status = Trajectory::Status::Converged;
  } else {
    while (tau < tau_max) {
      try {
        fe(z[0], state_x(z), k1);
        for (int i = 0; i <= n; ++i) ztmp[i] = z[i] + 0.5 * h * k1[i];
        fe(ztmp[0], state_x(ztmp), k2);
        for (int i = 0; i <= n; ++i) ztmp[i] = z[i] + 0.5 * h * k2[i];
        fe(ztmp[0], state_x(ztmp), k3);
        for (int i = 0; i <= n; ++i) ztmp[i] = z[i] + h * k3[i];
        fe(ztmp[0], state_x(ztmp), k4);
      } catch (const domain_error& e) {
        traj.status = Trajectory::Status::DomainError;
        traj.error = e.what();
        break;
      }
      double dt_rk = (h / 6.0) * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]);
      for (int i = 0; i <= n; ++i) z[i] += (h / 6.0) * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
      tau += h;
      ++traj.steps;

      pcur = p2c(df.spec, Eigen::Map<const Vector>(z.data() + 1, n));
      if (pcur > 1.0) {
        if (pcur > 1.0 + 1e-9) {
          traj.status = Trajectory::Status::DomainError;
          traj.error = "trajectory overshot the horizon: p2c = " + std::to_string(pcur);
          break;
        }
        Vector xr = project_to_horizon(df.spec, Eigen::Map<const Vector>(z.data() + 1, n));
        for (int i = 0; i < n; ++i) z[static_cast<std::size_t>(i) + 1] = xr[i];
        pcur = p2c(df.spec, xr);
      }

      double integrand_cur = integrand_of(pcur, twoc, sig.k);
      traj.quad += 0.5 * h * (integrand_prev + integrand_cur);
      traj.max_step_t_gap =
          std::max(traj.max_step_t_gap,
                   std::abs(dt_rk - 0.5 * h * (integrand_prev + integrand_cur)));
      integrand_prev = integrand_cur;

      try {
        Gcur = fe(z[0], state_x(z), k1);
      } catch (const domain_error& e) {
        traj.status = Trajectory::Status::DomainError;
        traj.error = e.what();
        break;
      }
      push_sample(tau);

      if (gnorm(k1) < 1e-12 && 1.0 - pcur < 1e-10) {
        traj.status = Trajectory::Status::Converged;
        break;
      }
    }
  }

  traj.tau_end = tau;
  traj.t_end = z[0];
  traj.x_end = Eigen::Map<const Vector>(z.data() + 1, n);
  traj.integrand_end = integrand_of(pcur, twoc, sig.k);
  traj.C_end = Gcur;

  // Keep the exact terminal sample regardless of decimation.
  if (traj.samples.empty() || traj.samples.back().tau != tau) {
    TrajectorySample s;
    s.tau = tau;
    s.t = z[0];
    s.x = traj.x_end;
    s.p2c = pcur;
    s.G = Gcur;
    traj.samples.push_back(std::move(s));
  }
  return traj;
}

TmaxResult t_max(const DesingField& df, const Trajectory& traj) {
  if (traj.status != Trajectory::Status::Converged)
    throw numeric_error("t_max requested on a trajectory that did not converge");
  const double kC = df.sys.sig.k * traj.C_end;
  if (!(kC > 0.0))
    throw degenerate_error("limiting equilibrium has k C* <= 0; tail correction undefined");

  TmaxResult r;
  r.tail = traj.integrand_end / kC;
  r.via_quadrature = traj.t0 + traj.quad + r.tail;
  r.via_t_limit = traj.t_end + r.tail;
  r.route_gap = std::abs(r.via_quadrature - r.via_t_limit);
  if (r.route_gap > 1e-6)
    throw numeric_error("t_max routes disagree by " + std::to_string(r.route_gap));
  r.value = r.via_quadrature;
  return r;
}

RateFitReport rate_check(const DesingField& df, const Trajectory& traj,
                         const HorizonEquilibrium& eq, const BalanceRoot& root) {
  const auto& sig = df.sys.sig;
  const int n = sig.n;
  RateFitReport rep;

  // The fit compares against the coefficients of this particular root, so
  // the trajectory must actually end at the paired equilibrium.
  if ((traj.x_end - eq.x_star).lpNorm<Eigen::Infinity>() > 1e-6) return rep;

  TmaxResult tm = t_max(df, traj);
  const double tmax = tm.value;

  // Fit over one decade of theta = t_max - t, placed as deep as the
  // resolution of t_max allows.
  auto collect = [&](double lo, double hi, std::vector<const TrajectorySample*>& out) {
    out.clear();
    for (const auto& s : traj.samples) {
      double theta = tmax - s.t;
      if (theta >= lo && theta <= hi && s.p2c < 1.0 - 1e-14) out.push_back(&s);
    }
  };

  std::vector<const TrajectorySample*> tail;
  double scale = std::max(std::abs(tmax), 1.0);
  for (double decade = 1e-5; decade <= 1e-2 + 1e-15; decade *= 10.0) {
    collect(scale * decade, scale * decade * 10.0, tail);
    if (tail.size() >= 20) {
      rep.theta_lo = scale * decade;
      rep.theta_hi = scale * decade * 10.0;
      break;
    }
  }
  rep.tail_samples = static_cast<int>(tail.size());
  if (tail.size() < 20) return rep;  // inconclusive
  rep.conclusive = true;

  rep.pass = true;
  for (int i = 0; i < n; ++i) {
    RateFitComponent rc;
    rc.component = i;
    rc.slope_expected = -sig.alpha[i] / sig.k;
    rc.coefficient_expected = std::abs(root.Y0[i]);
    if (std::abs(root.Y0[i]) <= 1e-10) {
      rep.components.push_back(rc);
      continue;
    }
    std::vector<double> lt, ly;
    for (const auto* s : tail) {
      double kappa = 1.0 / (1.0 - s->p2c);
      double y = s->x[i] * std::pow(kappa, static_cast<double>(sig.alpha[i]));
      if (std::abs(y) <= 0.0) continue;
      lt.push_back(std::log(tmax - s->t));
      ly.push_back(std::log(std::abs(y)));
    }
    if (lt.size() < 20) {
      rep.components.push_back(rc);
      continue;
    }
    double mu = 0.0, mv = 0.0;
    for (std::size_t j = 0; j < lt.size(); ++j) {
      mu += lt[j];
      mv += ly[j];
    }
    mu /= static_cast<double>(lt.size());
    mv /= static_cast<double>(lt.size());
    double suu = 0.0, suv = 0.0;
    for (std::size_t j = 0; j < lt.size(); ++j) {
      suu += (lt[j] - mu) * (lt[j] - mu);
      suv += (lt[j] - mu) * (ly[j] - mv);
    }
    rc.fitted = true;
    rc.slope = suv / suu;
    // Coefficient with the theoretical slope held fixed; extrapolating the
    // free-fit intercept to theta = 1 would amplify slope noise.
    double acc = 0.0;
    for (std::size_t j = 0; j < lt.size(); ++j) acc += ly[j] - rc.slope_expected * lt[j];
    rc.coefficient = std::exp(acc / static_cast<double>(lt.size()));
    rc.pass = std::abs(rc.slope - rc.slope_expected) <= 0.05 &&
              std::abs(rc.coefficient - rc.coefficient_expected) <=
                  0.05 * rc.coefficient_expected;
    rep.pass = rep.pass && rc.pass;
    rep.components.push_back(rc);
  }
  return rep;
}

void write_trajectory_csv(std::ostream& os, const DesingField& df, const Trajectory& traj) {
  const int n = df.sys.sig.n;
  os << "tau,t";
  for (int i = 1; i <= n; ++i) os << ",x" << i;
  os << ",p2c,G,kappa_inv\n";
  char buf[64];
  auto emit = [&](double v) {
    int len = std::snprintf(buf, sizeof buf, "%.17g", v);
    os.write(buf, len);
  };
  for (const auto& s : traj.samples) {
    emit(s.tau);
    os << ',';
    emit(s.t);
    for (int i = 0; i < n; ++i) {
      os << ',';
      emit(s.x[i]);
    }
    os << ',';
    emit(s.p2c);
    os << ',';
    emit(s.G);
    os << ',';
    emit(1.0 - s.p2c);
    os << '\n';
  }
}

}  // namespace blowup
