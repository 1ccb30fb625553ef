#include <doctest.h>

#include <cmath>

#include "blowup/correspondence.hpp"
#include "test_util.hpp"

using namespace blowup;

TEST_CASE("transversal eigenpair for k > 1 is (0, Lambda x*) itself") {
  auto sf = testutil::load_system("wwl_k2");
  DesingField df = build(sf.def);
  auto fx = testutil::fixtures("wwl_k2");
  double t = testutil::fx_num(fx, "t_for_a_minus_half");
  auto roots = find_roots(sf.def, t, sf.seeds);
  REQUIRE_FALSE(roots.empty());
  auto eq = root_to_equilibrium(df, roots[0]);
  auto dec = decompose_at_equilibrium(df, eq.t_star, eq.x_star);
  auto tp = transversal_pair(dec);
  CHECK(tp.lambda == doctest::Approx(-eq.C_star).epsilon(1e-12));
  // (0, x1, 3 x2, x3, 3 x4) for alpha = (1, 3, 1, 3)
  Vector want(5);
  want << 0.0, eq.x_star[0], 3.0 * eq.x_star[1], eq.x_star[2], 3.0 * eq.x_star[3];
  CHECK((tp.vec - want).lpNorm<Eigen::Infinity>() < 1e-12);
  CHECK(tp.residual < 1e-8);
}

TEST_CASE("transversal eigenpair for k = 1 solves the eigen equation") {
  auto sf = testutil::load_system("painleve1");
  DesingField df = build(sf.def);
  auto roots = find_roots(sf.def, 0.0, sf.seeds);
  auto eq = root_to_equilibrium(df, roots.at(0));
  auto dec = decompose_at_equilibrium(df, eq.t_star, eq.x_star);
  auto tp = transversal_pair(dec);
  CHECK(tp.residual < 1e-8);
  CHECK((dec.Dg * tp.vec + eq.C_star * tp.vec).norm() < 1e-8 * tp.vec.norm());
  // the time-independent leading part makes d vanish here
  CHECK(std::abs(tp.d) < 1e-12);
}

TEST_CASE("reference transversal data of the k=1 oscillators") {
  auto sf = testutil::load_system("wwl_k1");
  DesingField df = build(sf.def);
  auto fx = testutil::fixtures("wwl_k1");
  const auto ref = fx.at("reference_run").at("value");
  double t_star = ref.at("t_max").get<double>();
  double tol = fx.at("reference_run").at("tol_scalar_abs").get<double>();

  Vector want_x(4), want_v(4), want_evec(5);
  for (int i = 0; i < 4; ++i) {
    want_x[i] = ref.at("x_star")[static_cast<std::size_t>(i)].get<double>();
    want_v[i] = ref.at("v_star_alpha")[static_cast<std::size_t>(i)].get<double>();
  }
  for (int i = 0; i < 5; ++i)
    want_evec[i] = ref.at("transversal_evec")[static_cast<std::size_t>(i)].get<double>();

  auto roots = find_roots(sf.def, t_star, sf.seeds);
  bool matched = false;
  for (const auto& root : roots) {
    auto eq = root_to_equilibrium(df, root);
    if ((eq.x_star - want_x).lpNorm<Eigen::Infinity>() > 1e-6) continue;
    matched = true;
    auto dec = decompose_at_equilibrium(df, eq.t_star, eq.x_star);
    CHECK((dec.v_ext.tail(4) - want_v).lpNorm<Eigen::Infinity>() < tol);
    auto tp = transversal_pair(dec);
    CHECK(std::abs(tp.d - ref.at("d").get<double>()) < tol);
    Vector lead1 = tp.vec / tp.vec[0];
    CHECK((lead1 - want_evec).lpNorm<Eigen::Infinity>() < tol);
  }
  CHECK(matched);
}

TEST_CASE("nonautonomous zero pair and the equilibrium-curve tangent") {
  auto sf = testutil::load_system("selfsimilar");
  DesingField df = build(sf.def);
  auto fx = testutil::fixtures("selfsimilar");
  Vector root_want = testutil::fx_vec(fx, "root_t1");
  Vector zero_want = testutil::fx_vec(fx, "zero_evec_t1");
  Vector tangent_want = testutil::fx_vec(fx, "tangent_t1");

  auto roots = find_roots(sf.def, 1.0, sf.seeds);
  const BalanceRoot* root = nullptr;
  for (const auto& r : roots)
    if ((r.Y0 - root_want).lpNorm<Eigen::Infinity>() < 1e-9) root = &r;
  REQUIRE(root != nullptr);

  auto eq = root_to_equilibrium(df, *root);
  auto dec = decompose_at_equilibrium(df, eq.t_star, eq.x_star);
  auto pm = power_matrix(sf.def, *root);
  auto zp = nonautonomous_zero_pairs(pm, dec);
  REQUIRE_FALSE(zp.A_singular);
  CHECK(zp.residual_A < 1e-8);
  CHECK(zp.residual_Dg < 1e-8);
  CHECK(zp.tangency < 1e-9);
  CHECK((zp.vec_A - zero_want).lpNorm<Eigen::Infinity>() < 1e-9);

  // (I - P) r^-Lambda applied to the zero eigenvector of A^ext gives the
  // tangent of the equilibrium curve, normalized to leading component 1.
  Vector scaled(3);
  scaled[0] = zp.vec_A[0];
  for (int i = 0; i < 2; ++i)
    scaled[i + 1] = zp.vec_A[i + 1] * std::pow(eq.r, -static_cast<double>(sf.def.sig.alpha[i]));
  Vector projected = (Matrix::Identity(3, 3) - dec.P_ext) * scaled;
  projected /= projected[0];
  CHECK((projected - tangent_want).lpNorm<Eigen::Infinity>() < 1e-9);
  // and it agrees with the Dg-side zero eigenvector
  CHECK((projected - zp.vec_Dg).lpNorm<Eigen::Infinity>() < 1e-9);
}

TEST_CASE("autonomous leading part gives the zero eigenvector (1, 0, ..., 0)") {
  SystemDef def;
  def.name = "wwl_k1_frozen";
  def.states = {"u1", "v1", "u2", "v2"};
  def.sig = QHSignature::make({1, 2, 1, 2}, 1.0);
  for (const char* s : {"v1", "-u1^3 - 2*u1*u2^2*(-0.8)", "v2", "-u2^3 - 2*u1^2*u2*(-0.8)"})
    def.f_qh.push_back(parse(s, def.states));
  for (int i = 0; i < 4; ++i) def.f_res.push_back(parse("0", def.states));

  DesingField df = build(def);
  auto roots = find_roots(def, 0.0, {});
  REQUIRE_FALSE(roots.empty());
  auto eq = root_to_equilibrium(df, roots[0]);
  auto dec = decompose_at_equilibrium(df, eq.t_star, eq.x_star);
  auto pm = power_matrix(def, roots[0]);
  CHECK(pm.Dt_col.norm() == 0.0);
  auto zp = nonautonomous_zero_pairs(pm, dec);
  CHECK(zp.vec_A.tail(4).norm() == 0.0);
  CHECK(zp.vec_Dg.tail(4).norm() < 1e-12);
}

TEST_CASE("tangential map and the lambda~ = 1 exclusion") {
  auto sf = testutil::load_system("painleve1");
  DesingField df = build(sf.def);
  auto fx = testutil::fixtures("painleve1");
  auto roots = find_roots(sf.def, 0.0, sf.seeds);
  auto rep = verify_correspondence(df, roots.at(0));

  // lambda~ = -6 maps onto the fixture's Dg eigenvalue
  Vector spec_dg = testutil::fx_vec(fx, "spec_Dg");
  double want = spec_dg.minCoeff();  // -6 * 17^(-1/12)
  bool found = false;
  for (const auto& chk : rep.tangential) {
    if (!chk.note.empty()) {
      CHECK(std::abs(chk.lambda_A - std::complex<double>(1.0, 0.0)) < 1e-9);
      continue;
    }
    CHECK(chk.residual_Dg < 1e-7);
    if (std::abs(chk.lambda_Dg - std::complex<double>(want, 0.0)) < 1e-9) found = true;
  }
  CHECK(found);

  // scaling identity: the excluded lambda~ = 1 would land on k C*
  CHECK(std::abs(std::pow(rep.eq.r, -sf.def.sig.k) - sf.def.sig.k * rep.eq.C_star) < 1e-12);
}

TEST_CASE("full correspondence for all bundled systems at three times each") {
  for (const char* name : {"painleve1", "selfsimilar", "wwl_k2", "wwl_k1"}) {
    CAPTURE(name);
    auto sf = testutil::load_system(name);
    DesingField df = build(sf.def);
    auto fx = testutil::fixtures(name);
    for (const auto& tj : fx.at("correspondence_t_values").at("value")) {
      double t = tj.get<double>();
      CAPTURE(t);
      auto roots = find_roots(sf.def, t, sf.seeds);
      REQUIRE_FALSE(roots.empty());
      for (const auto& root : roots) {
        auto rep = verify_correspondence(df, root);
        CHECK(rep.multiset_match);
        CHECK(rep.multiset_err < 1e-6);
        CHECK(rep.max_pair_residual < 1e-7);
        CHECK(rep.verdict.m == rep.verdict.m_A + 1);
        // time components: eigenvectors for nonzero eigenvalues live in (0, C^n)
        for (const auto& chk : rep.tangential)
          if (chk.note.empty()) CHECK(std::abs(chk.vec_A[0]) < 1e-10);
      }
    }
  }
}

TEST_CASE("existence verdicts and rates") {
  SUBCASE("first Painleve blows up with rates theta^-2, 2 theta^-3") {
    auto sf = testutil::load_system("painleve1");
    DesingField df = build(sf.def);
    auto roots = find_roots(sf.def, 0.0, sf.seeds);
    auto rep = verify_correspondence(df, roots.at(0));
    CHECK(rep.verdict.status == BlowupVerdict::Status::Exists);
    CHECK(rep.verdict.m_A == 1);
    CHECK(rep.verdict.m == 2);
    REQUIRE(rep.verdict.rates.size() == 2);
    CHECK(rep.verdict.rates[0].exponent == doctest::Approx(-2.0));
    CHECK(rep.verdict.rates[0].coefficient == doctest::Approx(1.0));
    CHECK(rep.verdict.rates[1].exponent == doctest::Approx(-3.0));
    CHECK(rep.verdict.rates[1].coefficient == doctest::Approx(2.0));
    CHECK(rep.verdict.resonance_flags.empty());
  }

  SUBCASE("k=1 oscillators blow up with the square-root coefficient") {
    auto sf = testutil::load_system("wwl_k1");
    DesingField df = build(sf.def);
    auto fx = testutil::fixtures("wwl_k1");
    double t = fx.at("correspondence_t_values").at("value")[0].get<double>();
    auto roots = find_roots(sf.def, t, sf.seeds);
    REQUIRE_FALSE(roots.empty());
    double coeff_want = std::sqrt(-2.0 / (1.0 + 2.0 * std::sin(t)));
    for (const auto& root : roots) {
      auto rep = verify_correspondence(df, root);
      CHECK(rep.verdict.status == BlowupVerdict::Status::Exists);
      for (const auto& rate : rep.verdict.rates)
        if (sf.def.sig.alpha[rate.component] == 1) {
          CHECK(rate.exponent == doctest::Approx(-1.0));
          CHECK(std::abs(std::abs(rate.coefficient) - coeff_want) < 1e-9);
        }
    }
  }
}

TEST_CASE("repeated spectra: one copy of 1 trades with the transversal pair") {
  // Two uncoupled copies of the first Painleve system, coupled only through
  // the embedding. Spec(A) = {1, 1, -6, -6}; the second eigenvalue 1 maps
  // tangentially onto +k C*, so the equilibrium gains an unstable direction
  // and the simple-spectrum guard downgrades eigenvector claims.
  SystemDef def;
  def.name = "painleve_pair";
  def.states = {"u1", "v1", "u2", "v2"};
  def.sig = QHSignature::make({2, 3, 2, 3}, 1.0);
  for (const char* s : {"v1", "6*u1^2", "v2", "6*u2^2"})
    def.f_qh.push_back(parse(s, def.states));
  for (const char* s : {"0", "t", "0", "t"}) def.f_res.push_back(parse(s, def.states));

  DesingField df = build(def);
  std::vector<Vector> seeds;
  {
    Vector s(4);
    s << 1.0, 2.0, 1.0, 2.0;
    seeds.push_back(s);
  }
  auto roots = find_roots(def, 0.0, seeds);
  const BalanceRoot* both = nullptr;
  for (const auto& r : roots)
    if (r.Y0.minCoeff() > 0.5) both = &r;  // the root with both copies active
  REQUIRE(both != nullptr);

  auto rep = verify_correspondence(df, *both);
  CHECK_FALSE(rep.spectrum_simple);
  CHECK(rep.tangential.empty());
  CHECK(rep.multiset_match);
  CHECK(rep.multiset_err < 1e-6);
  // +k C* really is an eigenvalue of Dg here
  double kC = def.sig.k * rep.eq.C_star;
  double best = 1e9;
  for (int i = 0; i < rep.spec_Dg.size(); ++i)
    best = std::min(best, std::abs(rep.spec_Dg[i] - std::complex<double>(kC, 0.0)));
  CHECK(best < 1e-9);
  // stability gap survives: m_A = 2 stable of {1, 1, -6, -6}... and m = 3
  CHECK(rep.verdict.m_A == 2);
  CHECK(rep.verdict.m == 3);
}

TEST_CASE("non-integer order: the self-similar family at m = -1/2") {
  // k = 3/2; the desingularized field carries genuine fractional powers of
  // 1 - p2c, exercising the real-exponent paths end to end.
  SystemDef def;
  def.name = "selfsimilar_m_half";
  def.states = {"u", "v"};
  def.sig = QHSignature::make({1, 1}, 1.5);
  def.f_qh.push_back(parse("u^(1.5)*v", def.states));
  def.f_qh.push_back(parse("t*u^(1.5)*v", def.states));
  def.f_res.push_back(parse("0", def.states));
  def.f_res.push_back(parse("-u", def.states));

  DesingField df = build(def);
  // closed forms at t = 1: U = V = (3/2)^(-2/3), C* = 2^(-3/4)
  double U = std::pow(1.5, -2.0 / 3.0);
  Vector seed(2);
  seed << U, U;
  auto roots = find_roots(def, 1.0, std::vector<Vector>{seed});
  const BalanceRoot* root = nullptr;
  for (const auto& r : roots)
    if (r.Y0.minCoeff() > 0.0 && std::abs(r.Y0[0] - U) < 1e-9) root = &r;
  REQUIRE(root != nullptr);

  auto rep = verify_correspondence(df, *root);
  CHECK(std::abs(rep.eq.C_star - std::pow(2.0, -0.75)) < 1e-10);
  CHECK(std::abs(rep.eq.r - std::pow(1.5 * rep.eq.C_star, -1.0 / 1.5)) < 1e-10);
  CHECK(rep.multiset_match);
  CHECK(rep.max_pair_residual < 1e-7);
  // Spec(A) = {1, -1/(1-m)} = {1, -2/3}
  std::vector<std::complex<double>> want{{-2.0 / 3.0, 0.0}, {1.0, 0.0}};
  CHECK(testutil::spectrum_distance(testutil::sorted_complex(rep.pm.eig_A), want) < 1e-9);
  // transversal pair uses the k > 1 branch
  CHECK(rep.transversal.vec[0] == 0.0);
}

TEST_CASE("vanishing d-denominator raises the formula-degenerate error") {
  EquilibriumDecomposition dec;
  dec.t_star = 0.0;
  dec.k = 1.0;
  dec.c = 1;
  dec.C_star = 1.0;
  dec.x_star = Vector(2);
  dec.x_star << 1.0, 0.0;
  dec.v_ext = Vector::Zero(3);
  dec.v_ext[1] = 1.0;
  dec.Dp_ext = Vector::Zero(3);
  dec.Dp_ext[1] = 1.0;
  // A_g + C* I = [[5, 1], [7, 0]] maps (0, 1) to (1, 0), so the inverse
  // sends v onto a vector orthogonal to the gradient: the denominator of d
  // vanishes.
  Matrix M(2, 2);
  M << 5.0, 1.0, 7.0, 0.0;
  dec.Ag_ext = Matrix::Zero(3, 3);
  dec.Ag_ext.block(1, 1, 2, 2) = M - Matrix::Identity(2, 2);
  dec.Dt_g = Vector(2);
  dec.Dt_g << 1.0, 1.0;
  dec.Dg = Matrix::Zero(3, 3);
  CHECK_THROWS_AS(transversal_pair(dec), formula_degenerate_error);
}
