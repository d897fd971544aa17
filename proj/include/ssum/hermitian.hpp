#pragma once

// Dense complex-matrix kernels used by the beamforming instance.
//
// All routines are pure functions of their arguments. Logarithms are natural
// (rates are reported in nats).

#include <Eigen/Dense>
#include <complex>

#include "ssum/errors.hpp"

namespace ssum {

using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;

/// Rates, log-determinants and capacities are all in natural-log units.
inline constexpr double kLogBase = 2.718281828459045235360287;

/// Validated Hermitian positive-definite matrix. Construction symmetrizes
/// within tolerance and caches the Cholesky factor.
class HermitianPD {
 public:
  explicit HermitianPD(const CMatrix& m);

  const CMatrix& matrix() const { return m_; }
  const Eigen::LLT<CMatrix>& llt() const { return llt_; }
  Eigen::Index size() const { return m_.rows(); }

 private:
  CMatrix m_;
  Eigen::LLT<CMatrix> llt_;
};

/// log det M through the Cholesky factor. log det(M^-1) = -chol_logdet(M).
double chol_logdet(const HermitianPD& m);
double chol_logdet(const CMatrix& m);

/// Solves A X = B for Hermitian positive-definite A.
CMatrix hermitian_solve(const HermitianPD& a, const CMatrix& b);
CMatrix hermitian_solve(const CMatrix& a, const CMatrix& b);

struct PowerSolution {
  double mu = 0.0;
  CMatrix v;
  double power = 0.0;  // Tr(V^H V) at the returned mu
  int evaluations = 0;
};

/// Finds the smallest mu >= 0 such that V(mu) = (A + mu I)^-1 B satisfies
/// Tr(V^H V) <= P, i.e. the Lagrange multiplier of
///   min Tr(V^H A V) - 2 Re Tr(B^H V)  s.t.  Tr(V^H V) <= P.
/// A must be Hermitian PSD. If A is singular and B has a component in its
/// null space, mu = 0 is never admissible and the search starts above zero.
/// Stops once max(1, mu) * (P - power) <= tol; tol <= 0 selects 1e-8 * P.
/// The returned V is always feasible.
PowerSolution power_bisection(const CMatrix& a, const CMatrix& b, double power_budget,
                              double tol = -1.0);

/// Tr(V^H V) for V = (A + mu I)^-1 B, or +inf if A + mu I is not PD.
double power_at(const CMatrix& a, const CMatrix& b, double mu);

inline double hermitian_defect(const CMatrix& m) {
  return (m - m.adjoint()).norm();
}

inline CMatrix symmetrize(const CMatrix& m) { return 0.5 * (m + m.adjoint()); }

}  // namespace ssum
