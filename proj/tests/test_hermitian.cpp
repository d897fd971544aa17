#include <gtest/gtest.h>

#include <cmath>

#include "ssum/hermitian.hpp"
#include "ssum/numeric.hpp"
#include "ssum/rng.hpp"

using namespace ssum;

namespace {

CMatrix random_pd(Eigen::Index n, RngStream& rng, double shift = 0.5) {
  CMatrix g = rng.complex_normal_matrix(n, n);
  CMatrix a = g * g.adjoint();
  a.diagonal().array() += shift;
  return a;
}

// Oracle: power of (A + mu I)^-1 B in the eigenbasis of A.
double eig_power(const Eigen::VectorXd& lam, const CMatrix& c, double mu) {
  double p = 0.0;
  for (Eigen::Index i = 0; i < lam.size(); ++i) p += c.row(i).squaredNorm() / std::pow(lam(i) + mu, 2);
  return p;
}

}  // namespace

TEST(Hermitian, LogdetMatchesEigenvalues) {
  RngStream rng(3);
  for (int t = 0; t < 20; ++t) {
    CMatrix a = random_pd(1 + t % 5, rng);
    Eigen::SelfAdjointEigenSolver<CMatrix> es(a);
    double oracle = es.eigenvalues().array().log().sum();
    EXPECT_NEAR(chol_logdet(a), oracle, 1e-10 * (1.0 + std::abs(oracle)));
  }
}

TEST(Hermitian, IdentityAndScalar) {
  EXPECT_DOUBLE_EQ(chol_logdet(CMatrix::Identity(4, 4)), 0.0);
  CMatrix s(1, 1);
  s(0, 0) = 5.0;
  EXPECT_NEAR(chol_logdet(s), std::log(5.0), 1e-15);
}

TEST(Hermitian, SolveResidual) {
  RngStream rng(4);
  CMatrix a = random_pd(4, rng);
  CMatrix b = rng.complex_normal_matrix(4, 2);
  CMatrix x = hermitian_solve(a, b);
  EXPECT_LT((a * x - b).norm(), 1e-10 * b.norm());
}

TEST(Hermitian, RejectsBadInput) {
  CMatrix ns(2, 2);
  ns << 1.0, 2.0, 0.0, 1.0;
  EXPECT_THROW(HermitianPD{ns}, NotPositiveDefinite);
  CMatrix neg = -CMatrix::Identity(2, 2);
  EXPECT_THROW(HermitianPD{neg}, NotPositiveDefinite);
  EXPECT_THROW(HermitianPD{CMatrix(2, 3)}, DimensionMismatch);
  EXPECT_THROW(hermitian_solve(CMatrix::Identity(2, 2), CMatrix::Ones(3, 1)), DimensionMismatch);
}

TEST(Hermitian, BisectionMatchesEigenOracle) {
  RngStream rng(5);
  for (int t = 0; t < 30; ++t) {
    const Eigen::Index m = 2 + t % 3;
    CMatrix a = random_pd(m, rng, 0.0);  // possibly near singular
    CMatrix b = rng.complex_normal_matrix(m, 2);
    const double p = 0.5 + rng.uniform();
    auto sol = power_bisection(a, b, p);

    Eigen::SelfAdjointEigenSolver<CMatrix> es(a);
    Eigen::VectorXd lam = es.eigenvalues().cwiseMax(0.0);
    CMatrix c = es.eigenvectors().adjoint() * b;
    double mu_oracle = 0.0;
    if (eig_power(lam, c, 0.0) > p) {
      double lo = 0.0, hi = 1.0;
      while (eig_power(lam, c, hi) > p) hi *= 2.0;
      for (int i = 0; i < 200; ++i) {
        double mid = 0.5 * (lo + hi);
        (eig_power(lam, c, mid) > p ? lo : hi) = mid;
      }
      mu_oracle = hi;
    }
    EXPECT_NEAR(sol.mu, mu_oracle, 1e-6 * (1.0 + mu_oracle));
    EXPECT_LE(sol.v.squaredNorm(), p * (1.0 + 1e-12));
    EXPECT_LE(sol.mu * std::abs(sol.v.squaredNorm() - p), 1e-6 * p);
  }
}

TEST(Hermitian, BisectionInactiveAndZero) {
  CMatrix a = 10.0 * CMatrix::Identity(2, 2);
  CMatrix b = CMatrix::Identity(2, 1);
  auto sol = power_bisection(a, b, 1.0);
  EXPECT_EQ(sol.mu, 0.0);
  EXPECT_NEAR(sol.v.squaredNorm(), 0.01, 1e-15);

  auto zero = power_bisection(a, CMatrix::Zero(2, 1), 1.0);
  EXPECT_EQ(zero.v.norm(), 0.0);
}

TEST(Hermitian, BisectionSingularA) {
  // A = 0: V = B / mu, so mu = ||B|| / sqrt(P)
  CMatrix a = CMatrix::Zero(3, 3);
  RngStream rng(6);
  CMatrix b = rng.complex_normal_matrix(3, 1);
  auto sol = power_bisection(a, b, 2.0);
  EXPECT_NEAR(sol.mu, b.norm() / std::sqrt(2.0), 1e-7);
  EXPECT_THROW(power_bisection(a, b, 0.0), Error);
}

TEST(Numeric, PairwiseSumAndStderr) {
  std::vector<double> v(1000, 0.1);
  EXPECT_NEAR(pairwise_sum(v), 100.0, 1e-12);
  std::vector<double> w{1.0, 2.0, 3.0, 4.0};
  EXPECT_DOUBLE_EQ(pairwise_mean(w), 2.5);
  // sample std of 1..4 is sqrt(5/3); stderr divides by sqrt(4)
  EXPECT_NEAR(standard_error(w), std::sqrt(5.0 / 3.0) / 2.0, 1e-15);
  EXPECT_EQ(standard_error(std::vector<double>{1.0}), 0.0);
  EXPECT_EQ(std::stod(format_double(0.1)), 0.1);
}

TEST(Rng, StreamsAreReproducibleAndDistinct) {
  RngStream a(42, 1), b(42, 1), c(42, 2);
  for (int i = 0; i < 10; ++i) {
    auto x = a.next_u64();
    EXPECT_EQ(x, b.next_u64());
    EXPECT_NE(x, c.next_u64());
  }
  RngStream g(9);
  double s = 0.0, s2 = 0.0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    Complex z = g.complex_normal(2.0);
    s += std::norm(z);
    s2 += z.real() * z.real();
  }
  EXPECT_NEAR(s / n, 2.0, 0.06);
  EXPECT_NEAR(s2 / n, 1.0, 0.04);
}
