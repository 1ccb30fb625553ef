#include <doctest.h>

#include <cmath>
#include <random>

#include "blowup/balance.hpp"
#include "blowup/desing.hpp"
#include "test_util.hpp"

using namespace blowup;

namespace {

// Independent formulas for the k = 1 coupled-oscillator field, written out
// by hand for cross-checking the symbolic construction.
double wwl1_g0_reference(const Vector& x) {
  double p4 = std::pow(x[0], 4) + x[1] * x[1] + std::pow(x[2], 4) + x[3] * x[3];
  return 0.25 * (1.0 + 3.0 * p4) * (1.0 - p4);
}

double wwl1_G_reference(double t, const Vector& x) {
  double a = std::sin(t);
  double f1 = x[1];
  double f2 = -std::pow(x[0], 3) - 2.0 * x[0] * x[2] * x[2] * a;
  double f3 = x[3];
  double f4 = -std::pow(x[2], 3) - 2.0 * x[0] * x[0] * x[2] * a;
  return std::pow(x[0], 3) * f1 + 0.5 * x[1] * f2 + std::pow(x[2], 3) * f3 + 0.5 * x[3] * f4;
}

Vector random_box(int n, std::mt19937_64& rng, double lo, double hi) {
  std::uniform_real_distribution<double> box(lo, hi);
  Vector x(n);
  for (int i = 0; i < n; ++i) x[i] = box(rng);
  return x;
}

}  // namespace

TEST_CASE("symbolic field matches hand-written forms for the k=1 oscillators") {
  auto sf = testutil::load_system("wwl_k1");
  DesingField df = build(sf.def);
  std::mt19937_64 rng(21);
  for (int i = 0; i < 50; ++i) {
    Vector x = random_box(4, rng, -0.7, 0.7);
    double t = random_box(1, rng, -3.0, 3.0)[0];
    FieldValue fv = eval_field(df, t, x);
    CHECK(fv.g0 == doctest::Approx(wwl1_g0_reference(x)).epsilon(1e-12));
    CHECK(fv.G == doctest::Approx(wwl1_G_reference(t, x)).epsilon(1e-12));
  }
}

TEST_CASE("field at the origin keeps the suppressed residual terms") {
  auto sf = testutil::load_system("painleve1");
  DesingField df = build(sf.def);
  auto fx = testutil::fixtures("painleve1");

  Vector zero = Vector::Zero(2);
  FieldValue fv = eval_field(df, 0.37, zero);
  CHECK(fv.g0 == doctest::Approx(testutil::fx_num(fx, "g0_at_origin")).epsilon(1e-15));
  // row for v carries kappa^-4 t, and the prefactor is 1/(2c) at p2c = 0
  CHECK(fv.g[1] == doctest::Approx(0.37 / 12.0).epsilon(1e-14));
  CHECK(fv.g[0] == 0.0);
  CHECK(fv.G == 0.0);
}

TEST_CASE("horizon is invariant: dp2c/dtau vanishes on p2c = 1") {
  std::mt19937_64 rng(22);
  for (const char* name : {"painleve1", "selfsimilar", "wwl_k2", "wwl_k1"}) {
    CAPTURE(name);
    auto sf = testutil::load_system(name);
    DesingField df = build(sf.def);
    const auto& sig = sf.def.sig;
    for (int i = 0; i < 100; ++i) {
      Vector x = testutil::random_horizon_point(df.spec, rng);
      double t = random_box(1, rng, -3.0, 3.0)[0];
      FieldValue fv = eval_field(df, t, x);
      double dp2c = 0.0;
      for (int j : sig.I_alpha)
        dp2c += 2.0 * static_cast<double>(df.spec.beta[j]) *
                std::pow(x[j], 2.0 * df.spec.beta[j] - 1.0) * fv.g[j];
      CHECK(std::abs(dp2c) < 1e-10);
    }
  }
}

TEST_CASE("symbolic Jacobian agrees with central differences") {
  std::mt19937_64 rng(23);
  for (const char* name : {"painleve1", "selfsimilar", "wwl_k2", "wwl_k1"}) {
    CAPTURE(name);
    auto sf = testutil::load_system(name);
    DesingField df = build(sf.def);
    const int n = sf.def.sig.n;
    for (int i = 0; i < 100; ++i) {
      Vector x = random_box(n, rng, -0.6, 0.6);
      double t = random_box(1, rng, -2.0, 2.0)[0];
      Matrix J = jacobian(df, t, x);
      const double h = 1e-6;
      for (int col = 0; col <= n; ++col) {
        double tp = t, tm = t;
        Vector xp = x, xm = x;
        if (col == 0) {
          tp += h;
          tm -= h;
        } else {
          xp[col - 1] += h;
          xm[col - 1] -= h;
        }
        FieldValue fp = eval_field(df, tp, xp);
        FieldValue fm = eval_field(df, tm, xm);
        for (int row = 0; row <= n; ++row) {
          double vp = row == 0 ? fp.g0 : fp.g[row - 1];
          double vm = row == 0 ? fm.g0 : fm.g[row - 1];
          double fd = (vp - vm) / (2.0 * h);
          double err = std::abs(J(row, col) - fd);
          CHECK(err <= std::max(1e-8, 1e-6 * std::max(std::abs(fd), std::abs(J(row, col)))));
        }
      }
    }
  }
}

TEST_CASE("Jacobian spectrum at the first-Painleve equilibrium") {
  auto sf = testutil::load_system("painleve1");
  DesingField df = build(sf.def);
  auto fx = testutil::fixtures("painleve1");
  Vector xs = testutil::fx_vec(fx, "x_star");
  Vector expect = testutil::fx_vec(fx, "spec_Dg");

  Matrix J = jacobian(df, 0.0, xs);
  Eigen::EigenSolver<Matrix> es(J);
  auto got = testutil::sorted_complex(es.eigenvalues());
  std::vector<std::complex<double>> want;
  for (int i = 0; i < expect.size(); ++i) want.emplace_back(expect[i], 0.0);
  CHECK(testutil::spectrum_distance(got, testutil::sorted_complex(want)) < 1e-9);
}

TEST_CASE("equilibrium decomposition satisfies its matrix identities") {
  for (const char* name : {"painleve1", "selfsimilar", "wwl_k2", "wwl_k1"}) {
    CAPTURE(name);
    auto sf = testutil::load_system(name);
    DesingField df = build(sf.def);
    double t = std::string(name) == "selfsimilar" ? 1.0 : 4.2;
    auto roots = find_roots(sf.def, t, sf.seeds);
    REQUIRE_FALSE(roots.empty());
    for (const auto& root : roots) {
      auto eq = root_to_equilibrium(df, root);
      auto dec = decompose_at_equilibrium(df, eq.t_star, eq.x_star);
      CHECK(std::abs(dec.Dp_ext.dot(dec.v_ext) - 1.0) < 1e-12);
      CHECK((dec.P_ext * dec.P_ext - dec.P_ext).cwiseAbs().maxCoeff() < 1e-10);
      CHECK(dec.decomposition_residual < 1e-9);
      CHECK(dec.qh_jacobian_gap < 1e-9);
    }
  }
}

TEST_CASE("non-equilibrium points are rejected by the decomposition") {
  auto sf = testutil::load_system("painleve1");
  DesingField df = build(sf.def);
  Vector off_horizon = Vector::Zero(2);
  CHECK_THROWS_AS(decompose_at_equilibrium(df, 0.0, off_horizon), numeric_error);

  Vector on_horizon_not_eq(2);
  on_horizon_not_eq << 0.0, 1.0;  // p2c = 1 but g != 0
  CHECK_THROWS_AS(decompose_at_equilibrium(df, 0.0, on_horizon_not_eq), numeric_error);
}

TEST_CASE("a misdeclared split is caught by the build") {
  // u' = v declared with the wrong weight for its slot
  SystemDef def;
  def.name = "bad";
  def.states = {"u", "v"};
  def.sig = QHSignature::make({1, 3}, 1.0);
  def.f_qh.push_back(parse("v", def.states));
  def.f_qh.push_back(parse("u^2", def.states));  // weight 2, expected k + alpha_2 = 4
  def.f_res.push_back(parse("0", def.states));
  def.f_res.push_back(parse("0", def.states));
  CHECK_THROWS_AS(build(def), numeric_error);
}
