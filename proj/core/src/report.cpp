#include "blowup/report.hpp"

#include <cmath>

namespace blowup {

ordered_json json_complex(const std::complex<double>& z) {
  return ordered_json{{"re", z.real()}, {"im", z.imag()}};
}

ordered_json json_vector(const Vector& v) {
  ordered_json a = ordered_json::array();
  for (int i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

ordered_json json_cvector(const ComplexVector& v) {
  ordered_json a = ordered_json::array();
  for (int i = 0; i < v.size(); ++i) a.push_back(json_complex(v[i]));
  return a;
}

ordered_json json_matrix(const Matrix& m) {
  ordered_json rows = ordered_json::array();
  for (int r = 0; r < m.rows(); ++r) {
    ordered_json row = ordered_json::array();
    for (int c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

namespace {

ordered_json verdict_json(const BlowupVerdict& v) {
  ordered_json rates = ordered_json::array();
  for (const auto& r : v.rates)
    rates.push_back(ordered_json{{"component", r.component},
                                 {"coefficient", r.coefficient},
                                 {"exponent", r.exponent}});
  return ordered_json{
      {"status", v.status == BlowupVerdict::Status::Exists ? "exists-type-I" : "inconclusive"},
      {"min_abs_re_spec_A", v.min_abs_re},
      {"m_A", v.m_A},
      {"m", v.m},
      {"rates", std::move(rates)},
      {"resonance_flags", v.resonance_flags},
  };
}

}  // namespace

ordered_json spectral_report_json(const DesingField& df, const SpectralReport& rep) {
  ordered_json j;
  j["t_star"] = rep.eq.t_star;
  j["root_Y0"] = json_vector(rep.root.Y0);
  j["root_residual"] = rep.root.residual_norm;
  j["r"] = rep.eq.r;
  j["equilibrium_x"] = json_vector(rep.eq.x_star);
  j["C_star"] = rep.eq.C_star;
  j["spec_A_ext"] = json_cvector(rep.spec_A_ext);
  j["spec_Dg"] = json_cvector(rep.spec_Dg);
  j["A_ext"] = json_matrix(rep.pm.A_ext);
  j["Dg"] = json_matrix(rep.dec.Dg);
  j["Dt_g"] = json_vector(rep.dec.Dt_g);

  ordered_json tv;
  tv["lambda"] = rep.transversal.lambda;
  tv["vector"] = json_vector(rep.transversal.vec);
  tv["residual"] = rep.transversal.residual;
  if (df.sys.sig.k == 1.0) tv["d"] = rep.transversal.d;
  j["transversal"] = std::move(tv);

  ordered_json zp;
  zp["A_singular"] = rep.zero.A_singular;
  if (!rep.zero.A_singular) {
    zp["vector_A"] = json_vector(rep.zero.vec_A);
    zp["vector_Dg"] = json_vector(rep.zero.vec_Dg);
    zp["residual_A"] = rep.zero.residual_A;
    zp["residual_Dg"] = rep.zero.residual_Dg;
    zp["tangency"] = rep.zero.tangency;
  }
  j["nonautonomous_zero"] = std::move(zp);

  ordered_json tang = ordered_json::array();
  for (const auto& chk : rep.tangential) {
    ordered_json e;
    e["lambda_A"] = json_complex(chk.lambda_A);
    if (!chk.note.empty()) {
      e["note"] = chk.note;
    } else {
      e["lambda_Dg"] = json_complex(chk.lambda_Dg);
      e["vector_Dg"] = json_cvector(chk.vec_Dg);
      e["residual_A"] = chk.residual_A;
      e["residual_Dg"] = chk.residual_Dg;
    }
    tang.push_back(std::move(e));
  }
  j["tangential"] = std::move(tang);

  ordered_json rev = ordered_json::array();
  for (const auto& chk : rep.reverse)
    rev.push_back(ordered_json{{"lambda_Dg", json_complex(chk.lambda_Dg)},
                               {"lambda_A", json_complex(chk.lambda_A)},
                               {"residual_A", chk.residual_A}});
  j["reverse"] = std::move(rev);

  j["spectrum_simple"] = rep.spectrum_simple;
  j["multiset_match"] = rep.multiset_match;
  j["multiset_err"] = rep.multiset_err;
  j["max_pair_residual"] = rep.max_pair_residual;
  j["invariants"] = ordered_json{
      {"decomposition_residual", rep.dec.decomposition_residual},
      {"qh_jacobian_gap", rep.dec.qh_jacobian_gap},
      {"projection_idempotency",
       (rep.dec.P_ext * rep.dec.P_ext - rep.dec.P_ext).cwiseAbs().maxCoeff()},
      {"gradp_dot_v", rep.dec.Dp_ext.dot(rep.dec.v_ext)},
      {"r_consistency", std::abs(rep.eq.r - rep.root.r_Y0)},
  };
  j["verdict"] = verdict_json(rep.verdict);
  return j;
}

ordered_json correspond_at(const DesingField& df, const SystemFile& sf, double t,
                           std::uint64_t seed) {
  auto roots = find_roots(df.sys, t, sf.seeds);
  ordered_json j;
  j["system"] = df.sys.name;
  j["seed"] = seed;
  j["t"] = t;
  ordered_json arr = ordered_json::array();
  for (const auto& root : roots) arr.push_back(spectral_report_json(df, verify_correspondence(df, root)));
  j["roots"] = std::move(arr);
  return j;
}

ReportResult run_report(const DesingField& df, const SystemFile& sf, const ReportOptions& opt) {
  ReportResult result;

  Vector x0;
  if (opt.x0) {
    x0 = *opt.x0;
  } else if (opt.y0) {
    x0 = embed(df.spec, opt.t0, *opt.y0).x;
  } else {
    throw numeric_error("report needs an initial point (--x0 or --y0)");
  }

  ordered_json j;
  j["system"] = df.sys.name;
  j["seed"] = opt.seed;
  j["options"] = ordered_json{{"t0", opt.t0},
                              {"x0", json_vector(x0)},
                              {"h", opt.h},
                              {"tau_max", opt.tau_max}};

  result.traj = integrate(df, opt.t0, x0, opt.h, opt.tau_max);
  j["flow"] = ordered_json{
      {"status", result.traj.status == Trajectory::Status::Converged     ? "converged"
                 : result.traj.status == Trajectory::Status::DomainError ? "domain-error"
                                                                         : "max-steps"},
      {"steps", result.traj.steps},
      {"tau_end", result.traj.tau_end},
      {"x_end", json_vector(result.traj.x_end)},
      {"t_end", result.traj.t_end},
      {"max_step_t_gap", result.traj.max_step_t_gap},
  };
  if (!result.traj.error.empty()) j["flow"]["error"] = result.traj.error;

  if (result.traj.status != Trajectory::Status::Converged) {
    result.converged = false;
    result.json = std::move(j);
    return result;
  }
  result.converged = true;

  TmaxResult tm = t_max(df, result.traj);
  j["t_max"] = ordered_json{{"value", tm.value},
                            {"via_quadrature", tm.via_quadrature},
                            {"via_t_limit", tm.via_t_limit},
                            {"tail", tm.tail},
                            {"route_gap", tm.route_gap}};

  // The limiting equilibrium, re-derived through the balance law at t_max
  // so all downstream quantities sit on an exact root.
  BalanceRoot root;
  try {
    root = root_near_equilibrium(df, tm.value, result.traj.x_end);
  } catch (const numeric_error&) {
    auto roots = find_roots(df.sys, tm.value, sf.seeds);
    if (roots.empty()) throw numeric_error("no balance root found near the limiting equilibrium");
    const BalanceRoot* best = &roots.front();
    double bestd = std::numeric_limits<double>::infinity();
    for (const auto& r : roots) {
      Vector x = r.Y0;
      for (int i = 0; i < df.sys.sig.n; ++i)
        x[i] *= std::pow(r.r_Y0, -static_cast<double>(df.sys.sig.alpha[i]));
      double d = (x - result.traj.x_end).norm();
      if (d < bestd) {
        bestd = d;
        best = &r;
      }
    }
    root = *best;
  }

  SpectralReport rep = verify_correspondence(df, root);
  j["analysis"] = spectral_report_json(df, rep);

  RateFitReport rf = rate_check(df, result.traj, rep.eq, rep.root);
  ordered_json rj;
  rj["conclusive"] = rf.conclusive;
  rj["pass"] = rf.pass;
  rj["tail_samples"] = rf.tail_samples;
  rj["theta_window"] = ordered_json::array({rf.theta_lo, rf.theta_hi});
  ordered_json comps = ordered_json::array();
  for (const auto& rc : rf.components) {
    ordered_json e;
    e["component"] = rc.component;
    e["fitted"] = rc.fitted;
    if (rc.fitted) {
      e["slope"] = rc.slope;
      e["slope_expected"] = rc.slope_expected;
      e["coefficient"] = rc.coefficient;
      e["coefficient_expected"] = rc.coefficient_expected;
      e["pass"] = rc.pass;
    }
    comps.push_back(std::move(e));
  }
  rj["components"] = std::move(comps);
  j["rate_fit"] = std::move(rj);

  result.json = std::move(j);
  return result;
}

}  // namespace blowup
