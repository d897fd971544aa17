#include "ssum/hermitian.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace ssum {

namespace {

constexpr double kHermitianTol = 1e-10;

bool factor_ok(const Eigen::LLT<CMatrix>& llt, const CMatrix& m) {
  if (llt.info() != Eigen::Success) return false;
  const auto& l = llt.matrixLLT();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    double pivot = l(i, i).real();
    if (!(pivot > 0.0) || !std::isfinite(pivot)) return false;
  }
  return true;
}

}  // namespace

HermitianPD::HermitianPD(const CMatrix& m) {
  if (m.rows() != m.cols()) {
    throw DimensionMismatch("HermitianPD: matrix is " + std::to_string(m.rows()) + "x" +
                            std::to_string(m.cols()));
  }
  double scale = m.norm();
  if (hermitian_defect(m) > kHermitianTol * std::max(scale, 1e-300)) {
    throw NotPositiveDefinite("HermitianPD: matrix is not Hermitian");
  }
  m_ = symmetrize(m);
  llt_.compute(m_);
  if (!factor_ok(llt_, m_)) throw NotPositiveDefinite("HermitianPD: Cholesky pivot <= 0");
}

double chol_logdet(const HermitianPD& m) {
  const auto& l = m.llt().matrixLLT();
  double acc = 0.0;
  for (Eigen::Index i = 0; i < m.size(); ++i) acc += std::log(l(i, i).real());
  return 2.0 * acc;
}

double chol_logdet(const CMatrix& m) { return chol_logdet(HermitianPD(m)); }

CMatrix hermitian_solve(const HermitianPD& a, const CMatrix& b) {
  if (b.rows() != a.size()) {
    throw DimensionMismatch("hermitian_solve: A is " + std::to_string(a.size()) +
                            " square, B has " + std::to_string(b.rows()) + " rows");
  }
  return a.llt().solve(b);
}

CMatrix hermitian_solve(const CMatrix& a, const CMatrix& b) {
  return hermitian_solve(HermitianPD(a), b);
}

double power_at(const CMatrix& a, const CMatrix& b, double mu) {
  CMatrix shifted = a;
  shifted.diagonal().array() += mu;
  Eigen::LLT<CMatrix> llt(shifted);
  if (!factor_ok(llt, shifted)) return std::numeric_limits<double>::infinity();
  return llt.solve(b).squaredNorm();
}

PowerSolution power_bisection(const CMatrix& a, const CMatrix& b, double power_budget,
                              double tol) {
  if (a.rows() != a.cols() || b.rows() != a.rows()) {
    throw DimensionMismatch("power_bisection: A " + std::to_string(a.rows()) + "x" +
                            std::to_string(a.cols()) + ", B has " + std::to_string(b.rows()) +
                            " rows");
  }
  if (!(power_budget > 0.0)) throw Error("power_bisection: power budget must be positive");
  if (tol <= 0.0) tol = 1e-8 * power_budget;

  PowerSolution out;
  auto solve_at = [&](double mu) {
    CMatrix shifted = a;
    shifted.diagonal().array() += mu;
    ++out.evaluations;
    Eigen::LLT<CMatrix> llt(shifted);
    if (!factor_ok(llt, shifted)) return std::pair<double, CMatrix>{
        std::numeric_limits<double>::infinity(), CMatrix()};
    CMatrix v = llt.solve(b);
    double p = v.squaredNorm();
    if (!std::isfinite(p)) p = std::numeric_limits<double>::infinity();
    return std::pair<double, CMatrix>{p, std::move(v)};
  };

  if (b.squaredNorm() == 0.0) {
    out.v = CMatrix::Zero(b.rows(), b.cols());
    return out;
  }

  auto [p0, v0] = solve_at(0.0);
  if (p0 <= power_budget) {
    out.mu = 0.0;
    out.power = p0;
    out.v = std::move(v0);
    return out;
  }

  double lo = 0.0;
  double hi = 1.0;
  auto [p_hi, v_hi] = solve_at(hi);
  while (p_hi > power_budget) {
    lo = hi;
    hi *= 2.0;
    if (!std::isfinite(hi) || hi > 1e300) {
      throw BracketFailure("power_bisection: no finite upper bracket");
    }
    std::tie(p_hi, v_hi) = solve_at(hi);
  }

  for (int it = 0; it < 2000; ++it) {
    // large multipliers amplify the power error in mu * (P - power)
    if ((power_budget - p_hi) * std::max(1.0, hi) <= tol) break;
    double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    auto [p_mid, v_mid] = solve_at(mid);
    if (p_mid > power_budget) {
      lo = mid;
    } else {
      hi = mid;
      p_hi = p_mid;
      v_hi = std::move(v_mid);
    }
  }
  out.mu = hi;
  out.power = p_hi;
  out.v = std::move(v_hi);
  return out;
}

}  // namespace ssum
