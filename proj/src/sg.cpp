#include "ssum/sg.hpp"

#include <algorithm>
#include <cmath>

namespace ssum::sg {

namespace {

TraceRecord make_record(int r, const VectorXd& prev, const VectorXd& next, double sampled) {
  TraceRecord rec;
  rec.r = r;
  rec.step_norm = (next - prev).norm();
  rec.sampled_obj = sampled;
  return rec;
}

double sampled_objective(const SmoothProblem& p, const VectorXd& x, const VectorXd& xi) {
  return p.value(x, xi) + p.lambda * x.lpNorm<1>();
}

void check_problem(const SmoothProblem& p, const VectorXd& x0) {
  if (!p.value || !p.gradient) throw Error("sg: problem needs value and gradient oracles");
  if (!(p.lipschitz > 0.0)) throw Error("sg: Lipschitz constant must be positive");
  if (x0.size() != p.dim) throw DimensionMismatch("sg: x0 has wrong dimension");
}

// a^T x and the split of a sample into (a, b).
struct Row {
  Eigen::Ref<const VectorXd> a;
  double b;
};

Row split(const VectorXd& xi) { return {xi.head(xi.size() - 1), xi(xi.size() - 1)}; }

}  // namespace

double shrink(double z, double tau) {
  if (z >= tau) return z - tau;
  if (z <= -tau) return z + tau;
  return 0.0;
}

VectorXd shrink(const VectorXd& z, double tau) {
  if (tau < 0.0) throw Error("shrink: tau must be >= 0");
  return z.unaryExpr([tau](double v) { return shrink(v, tau); });
}

std::function<VectorXd(const VectorXd&)> box_projection(double lo, double hi) {
  return [lo, hi](const VectorXd& x) { return VectorXd(x.cwiseMax(lo).cwiseMin(hi)); };
}

SgTrace sg_run(const SmoothProblem& problem, const VectorXd& x0, int r_max,
               const Sampler& sampler) {
  check_problem(problem, x0);
  SgTrace out;
  VectorXd x = x0;
  out.iterates.push_back(x);
  for (int r = 1; r <= r_max; ++r) {
    VectorXd xi = sampler();
    double sampled = sampled_objective(problem, x, xi);
    VectorXd next = x - problem.gradient(x, xi) / (r * problem.lipschitz);
    out.trace.records.push_back(make_record(r, x, next, sampled));
    x = std::move(next);
    out.iterates.push_back(x);
  }
  out.trace.iterations = r_max;
  out.trace.final_point = x;
  return out;
}

SgTrace projected_sg_baseline(const SmoothProblem& problem, const VectorXd& x0, int r_max,
                              const Sampler& sampler, double step0, bool constant_step) {
  check_problem(problem, x0);
  SgTrace out;
  VectorXd x = problem.project(x0);
  out.iterates.push_back(x);
  for (int r = 1; r <= r_max; ++r) {
    VectorXd xi = sampler();
    double sampled = sampled_objective(problem, x, xi);
    double step = constant_step ? step0 : step0 / r;
    VectorXd next = problem.project(x - step * problem.gradient(x, xi));
    out.trace.records.push_back(make_record(r, x, next, sampled));
    x = std::move(next);
    out.iterates.push_back(x);
  }
  out.trace.iterations = r_max;
  out.trace.final_point = x;
  return out;
}

SgTrace projected_ssum_sg(const SmoothProblem& problem, const VectorXd& x0, int r_max,
                          const Sampler& sampler) {
  check_problem(problem, x0);
  if ((problem.project(x0) - x0).norm() > 1e-12 * (1.0 + x0.norm())) {
    throw InfeasibleStart("projected_ssum_sg: x0 is not feasible");
  }
  SgTrace out;
  const double alpha = problem.lipschitz;
  double alpha_sum = 0.0;
  VectorXd x = x0;
  VectorXd z = x0;
  out.iterates.push_back(x);
  for (int r = 1; r <= r_max; ++r) {
    VectorXd xi = sampler();
    double sampled = sampled_objective(problem, x, xi);
    VectorXd grad = problem.gradient(x, xi);
    double prev_sum = alpha_sum;
    alpha_sum += alpha;
    z = (prev_sum * z + alpha * x - grad) / alpha_sum;
    VectorXd next = problem.project(z);
    out.trace.records.push_back(make_record(r, x, next, sampled));
    x = std::move(next);
    out.iterates.push_back(x);
    out.auxiliary.push_back(z);
  }
  out.trace.iterations = r_max;
  out.trace.final_point = x;
  return out;
}

SgTrace l1_ssum_sg(const SmoothProblem& problem, const VectorXd& x0, int r_max,
                   const Sampler& sampler) {
  check_problem(problem, x0);
  if (problem.lambda < 0.0) throw Error("l1_ssum_sg: lambda must be >= 0");
  SgTrace out;
  const double lip = problem.lipschitz;
  const double tau = problem.lambda / lip;
  VectorXd x = x0;
  VectorXd z;
  out.iterates.push_back(x);
  for (int r = 1; r <= r_max; ++r) {
    VectorXd xi = sampler();
    double sampled = sampled_objective(problem, x, xi);
    VectorXd grad = problem.gradient(x, xi);
    if (r == 1) {
      z = x - grad / lip;
    } else {
      // z^r from z^{r-1}: ((r-1) z^{r-1} + x^{r-1} - grad/L) / r
      z = ((r - 1) * z + x - grad / lip) / r;
    }
    VectorXd next = shrink(z, tau);
    out.trace.records.push_back(make_record(r, x, next, sampled));
    x = std::move(next);
    out.iterates.push_back(x);
    out.auxiliary.push_back(z);
  }
  out.trace.iterations = r_max;
  out.trace.final_point = x;
  return out;
}

SgModel::SgModel(SmoothProblem problem, std::optional<double> alpha)
    : problem_(std::move(problem)),
      alpha_(alpha.value_or(problem_.lipschitz)),
      weighted_sum_(VectorXd::Zero(problem_.dim)) {
  if (!problem_.value || !problem_.gradient) throw Error("sg: problem needs value and gradient");
}

double SgModel::eval_ghat1(const Point& x, const Point& y, const Sample& xi) const {
  VectorXd diff = x - y;
  return problem_.value(y, xi) + problem_.gradient(y, xi).dot(diff) +
         0.5 * alpha_ * diff.squaredNorm();
}

void SgModel::observe(const Point& y, const Sample& xi) {
  weighted_sum_ += alpha_ * y - problem_.gradient(y, xi);
  alpha_sum_ += alpha_;
}

SgModel::Point SgModel::minimize_aggregate() const {
  if (!(alpha_sum_ > 0.0)) throw Error("sg model: no samples observed");
  // (1/r) sum ghat1 + lambda ||x||_1 = (alpha_sum / 2r) ||x - z||^2 + lambda ||x||_1 + c.
  // The projection composes exactly only with separable (box) sets.
  VectorXd z = weighted_sum_ / alpha_sum_;
  if (problem_.lambda > 0.0) {
    // r cancels: the weight on the l1 term relative to the quadratic is r*lambda/alpha_sum,
    // and alpha_sum = r * alpha for a constant alpha.
    double r = alpha_sum_ / alpha_;
    z = shrink(z, problem_.lambda * r / alpha_sum_);
  }
  return problem_.project(z);
}

VectorXd SgModel::g2_subgradient(const Point& x, const VectorXd& smooth_grad) const {
  VectorXd s(x.size());
  const double lam = problem_.lambda;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (x(i) > 0) s(i) = lam;
    else if (x(i) < 0) s(i) = -lam;
    else s(i) = std::clamp(-smooth_grad(i), -lam, lam);
  }
  return s;
}

double estimate_lipschitz_quadratic(const MatrixXd& hessian, int iterations) {
  if (hessian.rows() != hessian.cols() || hessian.rows() == 0) {
    throw DimensionMismatch("estimate_lipschitz_quadratic: square matrix required");
  }
  VectorXd v = VectorXd::Ones(hessian.rows()).normalized();
  double lambda = 0.0;
  for (int i = 0; i < iterations; ++i) {
    VectorXd w = hessian * v;
    double nrm = w.norm();
    if (nrm == 0.0) return 0.0;
    lambda = v.dot(w);
    v = w / nrm;
  }
  return lambda;
}

SmoothProblem quadratic_mean_problem(int dim) {
  SmoothProblem p;
  p.dim = dim;
  p.value = [](const VectorXd& x, const VectorXd& xi) { return 0.5 * (x - xi).squaredNorm(); };
  p.gradient = [](const VectorXd& x, const VectorXd& xi) { return VectorXd(x - xi); };
  p.lipschitz = 1.0;
  return p;
}

SmoothProblem least_squares_problem(int dim, double max_row_norm) {
  SmoothProblem p;
  p.dim = dim;
  p.value = [](const VectorXd& x, const VectorXd& xi) {
    Row row = split(xi);
    double res = row.a.dot(x) - row.b;
    return 0.5 * res * res;
  };
  p.gradient = [](const VectorXd& x, const VectorXd& xi) {
    Row row = split(xi);
    return VectorXd((row.a.dot(x) - row.b) * row.a);
  };
  p.lipschitz = max_row_norm * max_row_norm;
  return p;
}

SmoothProblem logistic_problem(int dim, double max_row_norm) {
  SmoothProblem p;
  p.dim = dim;
  p.value = [](const VectorXd& x, const VectorXd& xi) {
    Row row = split(xi);
    double label = row.b >= 0 ? 1.0 : -1.0;
    double m = -label * row.a.dot(x);
    return m > 0 ? m + std::log1p(std::exp(-m)) : std::log1p(std::exp(m));
  };
  p.gradient = [](const VectorXd& x, const VectorXd& xi) {
    Row row = split(xi);
    double label = row.b >= 0 ? 1.0 : -1.0;
    double m = label * row.a.dot(x);
    double s = 1.0 / (1.0 + std::exp(m));  // sigmoid(-m)
    return VectorXd(-label * s * row.a);
  };
  p.lipschitz = 0.25 * max_row_norm * max_row_norm;
  return p;
}

SmoothProblem cauchy_problem(int dim, double max_row_norm) {
  SmoothProblem p;
  p.dim = dim;
  p.value = [](const VectorXd& x, const VectorXd& xi) {
    Row row = split(xi);
    double res = row.a.dot(x) - row.b;
    return 0.5 * std::log1p(res * res);
  };
  p.gradient = [](const VectorXd& x, const VectorXd& xi) {
    Row row = split(xi);
    double res = row.a.dot(x) - row.b;
    return VectorXd(res / (1.0 + res * res) * row.a);
  };
  p.lipschitz = max_row_norm * max_row_norm;
  return p;
}

Sampler regression_sampler(const VectorXd& x_true, double max_row_norm, double noise,
                           RngStream& rng) {
  return [x_true, max_row_norm, noise, &rng]() {
    const Eigen::Index n = x_true.size();
    VectorXd a = rng.normal_vector(n);
    a.normalize();
    a *= max_row_norm * std::pow(rng.uniform(), 1.0 / static_cast<double>(n));
    VectorXd xi(n + 1);
    xi.head(n) = a;
    xi(n) = a.dot(x_true) + noise * rng.normal();
    return xi;
  };
}

}  // namespace ssum::sg
