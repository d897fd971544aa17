#pragma once

// Stochastic gradient methods as SSUM instances.
//
// With the quadratic surrogate ghat1(x, y, xi) = g1(y, xi) + <grad g1(y, xi), x - y>
// + (L/2) ||x - y||^2 the aggregate minimizer is a running average, which
// gives the 1/(rL) step-size recursion. Projected and l1-regularized
// variants keep an auxiliary average z^r and map it through the projection or
// the soft-shrinkage operator.

#include <Eigen/Dense>
#include <functional>
#include <optional>

#include "ssum/rng.hpp"
#include "ssum/ssum.hpp"

namespace ssum::sg {

using Eigen::MatrixXd;
using Eigen::VectorXd;

struct SmoothProblem {
  int dim = 0;
  std::function<double(const VectorXd& x, const VectorXd& xi)> value;
  std::function<VectorXd(const VectorXd& x, const VectorXd& xi)> gradient;
  /// Lipschitz constant of the gradient.
  double lipschitz = 1.0;
  /// Projection onto the feasible set; empty means R^n.
  std::function<VectorXd(const VectorXd&)> projection;
  /// Weight of the l1 term lambda ||x||_1 (g2).
  double lambda = 0.0;

  VectorXd project(const VectorXd& x) const { return projection ? projection(x) : x; }
};

/// Componentwise soft shrinkage, the proximal map of tau |.|.
VectorXd shrink(const VectorXd& z, double tau);
double shrink(double z, double tau);

/// Box projection helper.
std::function<VectorXd(const VectorXd&)> box_projection(double lo, double hi);

struct SgTrace {
  RunTrace<VectorXd> trace;
  std::vector<VectorXd> iterates;  // x^0 .. x^r_max
  std::vector<VectorXd> auxiliary;  // z^1 .. z^r_max (projected and l1 variants)
};

using Sampler = std::function<VectorXd()>;

/// x^r = x^{r-1} - (1/(rL)) grad g1(x^{r-1}, xi^r). Unconstrained, lambda = 0.
SgTrace sg_run(const SmoothProblem& problem, const VectorXd& x0, int r_max, const Sampler& sampler);

/// Classical projected SG with step `step0 / r` (or constant step0 when
/// `constant_step`). Used as a baseline; not an SSUM recursion.
SgTrace projected_sg_baseline(const SmoothProblem& problem, const VectorXd& x0, int r_max,
                              const Sampler& sampler, double step0, bool constant_step = false);

/// z^r = (sum_{i<r} alpha z^{r-1} + alpha x^{r-1} - grad) / (sum_{i<=r} alpha),
/// x^r = P(z^r), with alpha = L.
SgTrace projected_ssum_sg(const SmoothProblem& problem, const VectorXd& x0, int r_max,
                          const Sampler& sampler);

/// z^1 = x^0 - grad/L, z^{r+1} = (r z^r + x^r - grad/L) / (r + 1),
/// x^r = shrink_{lambda/L}(z^r).
SgTrace l1_ssum_sg(const SmoothProblem& problem, const VectorXd& x0, int r_max,
                   const Sampler& sampler);

/// SSUM surrogate model with the quadratic upper bound; g2 = lambda ||x||_1.
class SgModel {
 public:
  using Point = VectorXd;
  using Sample = VectorXd;

  /// `alpha` overrides the curvature used in the surrogate (defaults to L).
  explicit SgModel(SmoothProblem problem, std::optional<double> alpha = std::nullopt);

  double eval_g1(const Point& x, const Sample& xi) const { return problem_.value(x, xi); }
  double eval_g2(const Point& x, const Sample&) const { return problem_.lambda * x.lpNorm<1>(); }
  double eval_ghat1(const Point& x, const Point& y, const Sample& xi) const;
  void observe(const Point& y, const Sample& xi);
  Point minimize_aggregate() const;
  Point project(const Point& x) const { return problem_.project(x); }
  double distance(const Point& a, const Point& b) const { return (a - b).norm(); }
  VectorXd to_vector(const Point& x) const { return x; }
  Point from_vector(const VectorXd& v, const Point&) const { return v; }
  /// Minimum-norm element of lambda * d||x||_1 + grad, minus grad.
  VectorXd g2_subgradient(const Point& x, const VectorXd& smooth_grad) const;

  double alpha() const { return alpha_; }
  const VectorXd& weighted_sum() const { return weighted_sum_; }
  double alpha_sum() const { return alpha_sum_; }

 private:
  SmoothProblem problem_;
  double alpha_;
  double alpha_sum_ = 0.0;
  VectorXd weighted_sum_;  // sum_i (alpha x^{i-1} - grad_i)
};

static_assert(FlattenableModel<SgModel>);

/// Power-iteration estimate of the largest eigenvalue of a symmetric PSD
/// matrix, used as L for quadratic test problems.
double estimate_lipschitz_quadratic(const MatrixXd& hessian, int iterations = 200);

/// g1 = 0.5 ||x - xi||^2, L = 1.
SmoothProblem quadratic_mean_problem(int dim);

/// Random smooth test problems over samples xi = (a, b) in R^{n+1}:
/// least squares 0.5 (a^T x - b)^2, logistic log(1 + exp(-b a^T x)) and the
/// nonconvex Cauchy loss 0.5 log(1 + (a^T x - b)^2). `scale` bounds |a|.
SmoothProblem least_squares_problem(int dim, double max_row_norm);
SmoothProblem logistic_problem(int dim, double max_row_norm);
SmoothProblem cauchy_problem(int dim, double max_row_norm);

/// Sampler over (a, b) with a uniform in the ball of radius max_row_norm and
/// b = a^T x_true + noise.
Sampler regression_sampler(const VectorXd& x_true, double max_row_norm, double noise, RngStream& rng);

}  // namespace ssum::sg
