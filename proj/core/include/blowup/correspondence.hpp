#pragma once

#include <complex>
#include <optional>

#include "blowup/balance.hpp"
#include "blowup/desing.hpp"
#include "blowup/types.hpp"

namespace blowup {

// Raised when the k = 1 transversal eigenvector formula has a vanishing
// denominator in its constant d.
class formula_degenerate_error : public numeric_error {
public:
  explicit formula_degenerate_error(const std::string& what) : numeric_error(what) {}
};

enum class PairClass { Transversal, NonautonomousZero, Tangential };

struct EigenPairCheck {
  PairClass cls = PairClass::Tangential;
  std::complex<double> lambda_A;   // eigenvalue on the A^ext side
  std::complex<double> lambda_Dg;  // mapped eigenvalue on the Dg^ext side
  ComplexVector vec_A;
  ComplexVector vec_Dg;            // constructed via the correspondence map
  double residual_A = 0.0;         // ||A^ext v - lambda v|| / ||v||
  double residual_Dg = 0.0;        // ||Dg v - lambda v|| / ||v||
  std::string note;
};

struct BlowupVerdict {
  enum class Status { Exists, Inconclusive };
  Status status = Status::Inconclusive;
  double min_abs_re = 0.0;  // distance of Spec(A) from the imaginary axis
  int m_A = 0;              // stable eigenvalue count of A
  int m = 0;                // stable dimension at the equilibrium, m_A + 1
  struct Rate {
    int component = 0;
    double coefficient = 0.0;  // Y0_i
    double exponent = 0.0;     // -alpha_i / k
  };
  std::vector<Rate> rates;
  std::vector<std::string> resonance_flags;
};

struct TransversalPair {
  double lambda = 0.0;  // -C*
  Vector vec;           // n+1 components
  double residual = 0.0;
  double d = 0.0;       // only meaningful when k = 1
};

struct ZeroPair {
  Vector vec_A;   // (1, -A^-1 Dt f_qh)
  Vector vec_Dg;  // (1, -(Dx g)^-1 Dt g)
  double residual_A = 0.0;
  double residual_Dg = 0.0;
  double tangency = 0.0;  // |(Dp)^T vec_Dg|
  bool A_singular = false;
};

struct SpectralReport {
  BalanceRoot root;
  HorizonEquilibrium eq;
  EquilibriumDecomposition dec;
  BlowupPowerMatrix pm;

  ComplexVector spec_A_ext;  // {0} plus Spec(A)
  ComplexVector spec_Dg;     // computed eigenvalues of Dg^ext_*

  TransversalPair transversal;
  ZeroPair zero;
  std::vector<EigenPairCheck> tangential;   // forward Table-1 map
  std::vector<EigenPairCheck> reverse;      // reverse Table-2 map
  bool spectrum_simple = true;

  bool multiset_match = false;
  double multiset_err = 0.0;
  double max_pair_residual = 0.0;

  BlowupVerdict verdict;
};

// k > 1: (-C*, (0, Lambda_alpha x*)). k = 1: the eigenvector built from
// the restricted inverse of A_g + C* I and the constant d; throws
// formula_degenerate_error when d's denominator vanishes.
TransversalPair transversal_pair(const EquilibriumDecomposition& dec);

// The nonautonomous zero-eigenvalue pair on both sides; verifies tangency
// of the Dg-side vector to the horizon.
ZeroPair nonautonomous_zero_pairs(const BlowupPowerMatrix& pm,
                                  const EquilibriumDecomposition& dec);

// Forward map: eigenpairs (lt, (0,U)) of A^ext with lt != 0,1 map to
// (r^-k lt, (I-P) r^-Lambda (0,U)); verified directly against Dg.
std::vector<EigenPairCheck> tangential_match(const BlowupPowerMatrix& pm,
                                             const EquilibriumDecomposition& dec,
                                             const QHSignature& sig, double r);

// Existence criterion: type-I blow-up iff Spec(A) stays off the imaginary
// axis; emits predicted rates and the stability counts.
BlowupVerdict existence_verdict(const SystemDef& sys, const BalanceRoot& root,
                                const BlowupPowerMatrix& pm,
                                const ComplexVector* spec_Dg = nullptr);

// Full pipeline at one root: equilibrium, decomposition, both spectra,
// every correspondence check, verdict.
SpectralReport verify_correspondence(const DesingField& df, const BalanceRoot& root);

// Unit norm with the first significant component rotated positive real,
// so eigenvector comparisons are sign-deterministic.
ComplexVector normalize_eigenvector(const ComplexVector& v);

}  // namespace blowup
