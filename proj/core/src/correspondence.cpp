#include "blowup/correspondence.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

namespace blowup {

namespace {

using Complex = std::complex<double>;

// Applies (A_g + C* I)^INV: the plain inverse when -C* is safely outside
// Spec(A_g), otherwise the inverse restricted to the complement of the
// -C* eigenspace through the spectral decomposition.
struct RestrictedInverse {
  bool plain = true;
  Eigen::PartialPivLU<Matrix> lu;
  ComplexMatrix V, Vinv;
  ComplexVector factors;

  RestrictedInverse(const Matrix& Ag, double C_star) {
    Matrix M = Ag + C_star * Matrix::Identity(Ag.rows(), Ag.cols());
    Eigen::EigenSolver<Matrix> es(Ag);
    double closest = std::numeric_limits<double>::infinity();
    for (int i = 0; i < es.eigenvalues().size(); ++i)
      closest = std::min(closest, std::abs(es.eigenvalues()[i] + Complex(C_star, 0.0)));
    if (closest > 1e-8) {
      plain = true;
      lu.compute(M);
    } else {
      plain = false;
      V = es.eigenvectors();
      Vinv = V.inverse();
      factors = ComplexVector(es.eigenvalues().size());
      for (int i = 0; i < factors.size(); ++i) {
        Complex shifted = es.eigenvalues()[i] + Complex(C_star, 0.0);
        factors[i] = std::abs(shifted) > 1e-8 ? 1.0 / shifted : Complex(0.0, 0.0);
      }
    }
  }

  Vector apply(const Vector& b) const {
    if (plain) return lu.solve(b);
    ComplexVector y = Vinv * b.cast<Complex>();
    y.array() *= factors.array();
    return (V * y).real();
  }
};

double rel_eig_residual(const Matrix& M, const ComplexVector& v, Complex lambda) {
  return (M.cast<Complex>() * v - lambda * v).norm() / v.norm();
}

Vector pow_lambda_ext(const QHSignature& sig, double r, double s) {
  // diag(r^(s*0), r^(s*alpha_1), ..., r^(s*alpha_n)) as a vector of scales
  Vector d(sig.n + 1);
  d[0] = 1.0;
  for (int i = 0; i < sig.n; ++i) d[i + 1] = std::pow(r, s * sig.alpha[i]);
  return d;
}

}  // namespace

ComplexVector normalize_eigenvector(const ComplexVector& v) {
  double maxabs = 0.0;
  for (int i = 0; i < v.size(); ++i) maxabs = std::max(maxabs, std::abs(v[i]));
  ComplexVector w = v;
  for (int i = 0; i < v.size(); ++i)
    if (std::abs(v[i]) > 1e-9 * maxabs) {
      w *= std::conj(v[i]) / std::abs(v[i]);
      break;
    }
  return w / w.norm();
}

TransversalPair transversal_pair(const EquilibriumDecomposition& dec) {
  const int n = static_cast<int>(dec.x_star.size());
  TransversalPair tp;
  tp.lambda = -dec.C_star;

  Vector v_alpha = dec.v_ext.tail(n);
  if (dec.k > 1.0) {
    tp.vec = dec.v_ext;
  } else {
    Matrix Ag = dec.Ag_ext.block(1, 1, n, n);
    RestrictedInverse inv(Ag, dec.C_star);
    Vector dxp = dec.Dp_ext.tail(n);
    Vector inv_v = inv.apply(v_alpha);
    Vector inv_dtg = inv.apply(dec.Dt_g);
    double denom = dxp.dot(inv_v);
    if (std::abs(denom) < 1e-12)
      throw formula_degenerate_error(
          "denominator of the transversal constant d vanishes (|denom| = " +
          std::to_string(std::abs(denom)) + ")");
    tp.d = dxp.dot(inv_dtg) / denom;
    Vector w = dec.C_star / (2.0 * static_cast<double>(dec.c)) * v_alpha + tp.d * inv_v - inv_dtg;
    tp.vec = Vector(n + 1);
    tp.vec[0] = 1.0;
    tp.vec.tail(n) = w;
  }
  tp.residual = (dec.Dg * tp.vec - tp.lambda * tp.vec).norm() / tp.vec.norm();
  if (tp.residual > 1e-7)
    throw numeric_error("transversal eigenpair residual " + std::to_string(tp.residual) +
                        " exceeds 1e-7");
  return tp;
}

ZeroPair nonautonomous_zero_pairs(const BlowupPowerMatrix& pm,
                                  const EquilibriumDecomposition& dec) {
  const int n = static_cast<int>(dec.x_star.size());
  ZeroPair zp;

  Eigen::FullPivLU<Matrix> luA(pm.A);
  Eigen::FullPivLU<Matrix> luG(dec.Dx_g);
  if (!luA.isInvertible() || !luG.isInvertible()) {
    zp.A_singular = true;
    return zp;
  }

  zp.vec_A = Vector(n + 1);
  zp.vec_A[0] = 1.0;
  zp.vec_A.tail(n) = -luA.solve(pm.Dt_col);
  zp.residual_A = (pm.A_ext * zp.vec_A).norm() / zp.vec_A.norm();

  zp.vec_Dg = Vector(n + 1);
  zp.vec_Dg[0] = 1.0;
  zp.vec_Dg.tail(n) = -luG.solve(dec.Dt_g);
  zp.residual_Dg = (dec.Dg * zp.vec_Dg).norm() / zp.vec_Dg.norm();

  zp.tangency = std::abs(dec.Dp_ext.dot(zp.vec_Dg));

  if (zp.residual_A > 1e-8 || zp.residual_Dg > 1e-8)
    throw numeric_error("zero-eigenvalue pair residuals exceed 1e-8");
  if (zp.tangency > 1e-9)
    throw numeric_error("Dg zero eigenvector is not tangent to the horizon: " +
                        std::to_string(zp.tangency));
  return zp;
}

std::vector<EigenPairCheck> tangential_match(const BlowupPowerMatrix& pm,
                                             const EquilibriumDecomposition& dec,
                                             const QHSignature& sig, double r) {
  const int n = sig.n;
  Vector rdown = pow_lambda_ext(sig, r, -1.0);
  Matrix IP = Matrix::Identity(n + 1, n + 1) - dec.P_ext;
  double rmink = std::pow(r, -sig.k);

  std::vector<EigenPairCheck> out;
  for (int i = 0; i < pm.eig_A.size(); ++i) {
    Complex lt = pm.eig_A[i];
    EigenPairCheck chk;
    chk.cls = PairClass::Tangential;
    chk.lambda_A = lt;
    if (std::abs(lt - Complex(1.0, 0.0)) <= 1e-6) {
      chk.note = "lambda~ = 1 maps to the transversal direction; skipped in the tangential map";
      out.push_back(std::move(chk));
      continue;
    }
    ComplexVector Uext = ComplexVector::Zero(n + 1);
    Uext.tail(n) = pm.eigvec_A.col(i);
    chk.vec_A = normalize_eigenvector(Uext);
    chk.residual_A = rel_eig_residual(pm.A_ext, chk.vec_A, lt);

    chk.lambda_Dg = rmink * lt;
    ComplexVector w = IP.cast<Complex>() * (rdown.cast<Complex>().asDiagonal() * Uext);
    chk.vec_Dg = normalize_eigenvector(w);
    chk.residual_Dg = rel_eig_residual(dec.Dg, chk.vec_Dg, chk.lambda_Dg);
    if (chk.residual_Dg > 1e-7)
      throw numeric_error("tangential eigenpair residual " + std::to_string(chk.residual_Dg) +
                          " exceeds 1e-7 for lambda~ = " + std::to_string(lt.real()));
    out.push_back(std::move(chk));
  }
  return out;
}

BlowupVerdict existence_verdict(const SystemDef& sys, const BalanceRoot& root,
                                const BlowupPowerMatrix& pm, const ComplexVector* spec_Dg) {
  BlowupVerdict v;
  v.min_abs_re = std::numeric_limits<double>::infinity();
  for (int i = 0; i < pm.eig_A.size(); ++i) {
    v.min_abs_re = std::min(v.min_abs_re, std::abs(pm.eig_A[i].real()));
    if (pm.eig_A[i].real() < 0.0) ++v.m_A;
  }
  v.status = v.min_abs_re > 1e-8 ? BlowupVerdict::Status::Exists
                                 : BlowupVerdict::Status::Inconclusive;
  v.m = v.m_A + 1;

  if (v.status == BlowupVerdict::Status::Exists) {
    for (int i = 0; i < sys.sig.n; ++i)
      if (std::abs(root.Y0[i]) > 1e-10)
        v.rates.push_back({i, root.Y0[i], -sys.sig.alpha[i] / sys.sig.k});
  }

  // Arithmetic non-resonance scan over sum a_j lambda_j - lambda_j' with
  // sum a_j in {2, 3}, on the off-axis spectrum.
  std::vector<Complex> lams;
  if (spec_Dg) {
    for (int i = 0; i < spec_Dg->size(); ++i)
      if (std::abs((*spec_Dg)[i].real()) > 1e-8) lams.push_back((*spec_Dg)[i]);
  } else {
    for (int i = 0; i < pm.eig_A.size(); ++i)
      if (std::abs(pm.eig_A[i].real()) > 1e-8) lams.push_back(pm.eig_A[i]);
  }
  const int m = static_cast<int>(lams.size());
  auto scan = [&](int total) {
    // combinations with repetition of size `total` over m eigenvalues
    std::function<void(int, int, Complex)> rec = [&](int pos, int start, Complex acc) {
      if (pos == total) {
        for (int j = 0; j < m; ++j) {
          Complex val = acc - lams[j];
          if (std::abs(val) < 1e-6) {
            v.resonance_flags.push_back(
                "possible resonance: |sum - lambda_" + std::to_string(j) +
                "| = " + std::to_string(std::abs(val)) + " (order " + std::to_string(total) + ")");
          }
        }
        return;
      }
      for (int i = start; i < m; ++i) rec(pos + 1, i, acc + lams[i]);
    };
    rec(0, 0, Complex(0.0, 0.0));
  };
  scan(2);
  scan(3);
  return v;
}

SpectralReport verify_correspondence(const DesingField& df, const BalanceRoot& root) {
  const QHSignature& sig = df.sys.sig;
  const int n = sig.n;

  SpectralReport rep;
  rep.root = root;
  rep.eq = root_to_equilibrium(df, root);
  rep.dec = decompose_at_equilibrium(df, rep.eq.t_star, rep.eq.x_star);
  rep.pm = power_matrix(df.sys, root);

  rep.spec_A_ext = ComplexVector(n + 1);
  rep.spec_A_ext[0] = 0.0;
  rep.spec_A_ext.tail(n) = rep.pm.eig_A;

  Eigen::EigenSolver<Matrix> esg(rep.dec.Dg);
  rep.spec_Dg = esg.eigenvalues();

  double gap = std::numeric_limits<double>::infinity();
  for (int i = 0; i < rep.pm.eig_A.size(); ++i)
    for (int j = i + 1; j < rep.pm.eig_A.size(); ++j)
      gap = std::min(gap, std::abs(rep.pm.eig_A[i] - rep.pm.eig_A[j]));
  rep.spectrum_simple = !(gap < 1e-8);

  rep.transversal = transversal_pair(rep.dec);
  rep.zero = nonautonomous_zero_pairs(rep.pm, rep.dec);
  if (rep.spectrum_simple)
    rep.tangential = tangential_match(rep.pm, rep.dec, sig, rep.eq.r);

  // Reverse Table-2 map: Dg eigenpairs (excluding 0 and the transversal
  // -C*) pushed back into A^ext eigenspaces. Like the forward map, this is
  // an eigenvector claim, so repeated spectra downgrade it.
  double rmk = std::pow(rep.eq.r, sig.k);
  if (rep.spectrum_simple) {
    Vector rup = pow_lambda_ext(sig, rep.eq.r, 1.0);
    Matrix shift = rep.dec.Ag_ext - sig.k * rep.dec.C_star * Matrix::Identity(n + 1, n + 1);
    for (int i = 0; i < rep.spec_Dg.size(); ++i) {
      Complex lam = rep.spec_Dg[i];
      if (std::abs(lam) <= 1e-8) continue;
      if (std::abs(lam + Complex(rep.dec.C_star, 0.0)) <= 1e-8) continue;
      EigenPairCheck chk;
      chk.cls = PairClass::Tangential;
      chk.lambda_Dg = lam;
      chk.lambda_A = rmk * lam;
      ComplexVector w = esg.eigenvectors().col(i);
      ComplexVector U = rup.cast<Complex>().asDiagonal() * (shift.cast<Complex>() * w);
      if (U.norm() < 1e-8 * w.norm()) continue;  // annihilated transversal part
      chk.vec_A = normalize_eigenvector(U);
      chk.vec_Dg = normalize_eigenvector(w);
      chk.residual_A = rel_eig_residual(rep.pm.A_ext, chk.vec_A, chk.lambda_A);
      if (chk.residual_A > 1e-6 * (1.0 + std::abs(chk.lambda_A)))
        throw numeric_error("reverse correspondence violated for Dg eigenvalue " +
                            std::to_string(lam.real()));
      rep.reverse.push_back(std::move(chk));
    }
  }

  // Multiset identity Spec(Dg) = {0} u {-C*} u r^-k (Spec(A) \ {1}).
  // Exactly one copy of the eigenvalue 1 trades places with the
  // transversal -C*; further copies map tangentially onto k C*.
  int skip = -1;
  double skip_dist = 1e-6;
  for (int i = 0; i < rep.pm.eig_A.size(); ++i) {
    double dist = std::abs(rep.pm.eig_A[i] - Complex(1.0, 0.0));
    if (dist < skip_dist) {
      skip_dist = dist;
      skip = i;
    }
  }
  std::vector<Complex> predicted{Complex(0.0, 0.0), Complex(-rep.dec.C_star, 0.0)};
  for (int i = 0; i < rep.pm.eig_A.size(); ++i)
    if (i != skip) predicted.push_back(rep.pm.eig_A[i] / rmk);
  std::vector<bool> used(static_cast<std::size_t>(rep.spec_Dg.size()), false);
  rep.multiset_match = predicted.size() == static_cast<std::size_t>(rep.spec_Dg.size());
  rep.multiset_err = 0.0;
  for (const Complex& p : predicted) {
    int best = -1;
    double bestd = std::numeric_limits<double>::infinity();
    for (int j = 0; j < rep.spec_Dg.size(); ++j) {
      if (used[static_cast<std::size_t>(j)]) continue;
      double dist = std::abs(rep.spec_Dg[j] - p);
      if (dist < bestd) {
        bestd = dist;
        best = j;
      }
    }
    if (best < 0) {
      rep.multiset_match = false;
      break;
    }
    used[static_cast<std::size_t>(best)] = true;
    rep.multiset_err = std::max(rep.multiset_err, bestd);
    if (bestd > 1e-6 * (1.0 + std::abs(p))) rep.multiset_match = false;
  }

  rep.max_pair_residual = std::max({rep.transversal.residual, rep.zero.residual_A,
                                    rep.zero.residual_Dg});
  for (const auto& chk : rep.tangential)
    rep.max_pair_residual = std::max({rep.max_pair_residual, chk.residual_A, chk.residual_Dg});

  rep.verdict = existence_verdict(df.sys, root, rep.pm, &rep.spec_Dg);
  // Stability gap: stable dimension from Spec(Dg) must exceed m_A by one.
  int m_dg = 0;
  for (int i = 0; i < rep.spec_Dg.size(); ++i)
    if (rep.spec_Dg[i].real() < -1e-8) ++m_dg;
  if (rep.verdict.status == BlowupVerdict::Status::Exists && m_dg != rep.verdict.m)
    throw numeric_error("stability gap violated: dim W^s = " + std::to_string(m_dg) +
                        " but m_A + 1 = " + std::to_string(rep.verdict.m));
  return rep;
}

}  // namespace blowup
