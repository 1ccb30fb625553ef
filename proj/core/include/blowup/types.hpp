#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

namespace blowup {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using ComplexVector = Eigen::VectorXcd;
using ComplexMatrix = Eigen::MatrixXcd;

class numeric_error : public std::runtime_error {
public:
  explicit numeric_error(const std::string& what) : std::runtime_error(what) {}
};

// Raised when an equilibrium has C* = G(t*, x*) at or below zero, where the
// root/equilibrium bijection degenerates.
class degenerate_error : public numeric_error {
public:
  explicit degenerate_error(const std::string& what) : numeric_error(what) {}
};

// Root (t*, Y0) of the balance law -(1/k) Lambda Y0 + f_qh(t*, Y0) = 0.
struct BalanceRoot {
  double t_star = 0.0;
  Vector Y0;
  double residual_norm = 0.0;
  double r_Y0 = 0.0;  // p_alpha(Y0)
};

// Equilibrium (t*, x*) of the desingularized field on the horizon p2c = 1.
struct HorizonEquilibrium {
  double t_star = 0.0;
  Vector x_star;
  double C_star = 0.0;  // G(t*, x*)
  double r = 0.0;       // (k C*)^(-1/k)
  BalanceRoot root;
};

}  // namespace blowup
