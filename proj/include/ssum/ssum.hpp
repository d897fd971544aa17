#pragma once

// Stochastic successive upper-bound minimization.
//
// Every problem instance supplies a surrogate model: for a sample xi and an
// anchor y the model provides ghat1(., y, xi), a strongly convex upper bound
// of g1(., xi) that is tight at y. The engine draws xi^r, folds
// ghat(., x^{r-1}, xi^r) into the model's running aggregate, and moves to the
// exact minimizer of (1/r) * sum_i ghat(., x^{i-1}, xi^i) over the feasible
// set. Models compress history into fixed-size statistics; the engine only
// keeps past samples when surrogate-gap diagnostics are requested.

#include <Eigen/Dense>
#include <cmath>
#include <concepts>
#include <functional>
#include <utility>
#include <vector>

#include "ssum/errors.hpp"
#include "ssum/numeric.hpp"
#include "ssum/trace.hpp"

namespace ssum {

template <class M>
concept SurrogateModel = requires(M& m, const M& cm, const typename M::Point& x,
                                  const typename M::Sample& xi) {
  typename M::Point;
  typename M::Sample;
  { cm.eval_g1(x, xi) } -> std::convertible_to<double>;
  { cm.eval_g2(x, xi) } -> std::convertible_to<double>;
  { cm.eval_ghat1(x, x, xi) } -> std::convertible_to<double>;
  { m.observe(x, xi) };
  { m.minimize_aggregate() } -> std::convertible_to<typename M::Point>;
  { cm.project(x) } -> std::convertible_to<typename M::Point>;
  { cm.distance(x, x) } -> std::convertible_to<double>;
};

/// Models that can be flattened to real coordinates; needed by the
/// finite-difference diagnostics.
template <class M>
concept FlattenableModel = SurrogateModel<M> && requires(const M& cm, const typename M::Point& x,
                                                         const Eigen::VectorXd& v) {
  { cm.to_vector(x) } -> std::convertible_to<Eigen::VectorXd>;
  { cm.from_vector(v, x) } -> std::convertible_to<typename M::Point>;
};

template <SurrogateModel M>
double eval_g(const M& m, const typename M::Point& x, const typename M::Sample& xi) {
  return m.eval_g1(x, xi) + m.eval_g2(x, xi);
}

template <SurrogateModel M>
double eval_ghat(const M& m, const typename M::Point& x, const typename M::Point& y,
                 const typename M::Sample& xi) {
  return m.eval_ghat1(x, y, xi) + m.eval_g2(x, xi);
}

template <SurrogateModel M>
bool is_feasible(const M& m, const typename M::Point& x, double tol = 1e-9) {
  return m.distance(m.project(x), x) <= tol;
}

struct RunOptions {
  int r_max = 100;
  /// Record every n-th iteration (the last iteration is always recorded).
  int trace_every = 1;
  /// Keep (anchor, sample) history to evaluate fhat^r and f^r at traced
  /// iterations. Costs O(r) memory and O(r) work per traced iteration.
  bool track_gap = false;
  /// Stop once step_norm < early_stop_tol for early_stop_window consecutive
  /// iterations.
  bool early_stop = false;
  double early_stop_tol = 1e-10;
  int early_stop_window = 10;
  double feasibility_tol = 1e-9;
};

/// Runs the SSUM loop from a feasible x0. `sampler` is any callable returning
/// the next sample. `on_iterate(r, x^r)` is invoked after every update.
template <SurrogateModel M, class Sampler>
RunTrace<typename M::Point> run_ssum(
    M& model, Sampler&& sampler, const typename M::Point& x0, const RunOptions& opts,
    const std::function<void(int, const typename M::Point&)>& on_iterate = {}) {
  using Point = typename M::Point;
  using Sample = typename M::Sample;
  if (opts.r_max < 1) throw Error("run_ssum: r_max must be >= 1");
  if (!is_feasible(model, x0, opts.feasibility_tol)) {
    throw InfeasibleStart("run_ssum: x0 is not in the feasible set");
  }

  RunTrace<Point> trace;
  std::vector<std::pair<Point, Sample>> history;
  std::vector<double> buf_hat, buf_g, buf_prev;
  Point x = x0;
  int quiet = 0;
  const int every = std::max(1, opts.trace_every);

  for (int r = 1; r <= opts.r_max; ++r) {
    Sample xi = sampler();
    TraceRecord rec;
    rec.r = r;
    rec.sampled_obj = eval_g(model, x, xi);
    model.observe(x, xi);
    if (opts.track_gap) history.emplace_back(x, xi);
    Point next = model.minimize_aggregate();
    rec.step_norm = model.distance(next, x);

    bool record = (r % every == 0) || r == opts.r_max;
    if (opts.early_stop) {
      quiet = rec.step_norm < opts.early_stop_tol ? quiet + 1 : 0;
      if (quiet >= opts.early_stop_window) {
        record = true;
        trace.stopped_early = true;
      }
    }
    if (record && opts.track_gap) {
      buf_hat.clear();
      buf_g.clear();
      buf_prev.clear();
      for (const auto& [anchor, sample] : history) {
        buf_hat.push_back(eval_ghat(model, next, anchor, sample));
        buf_g.push_back(eval_g(model, next, sample));
        buf_prev.push_back(eval_ghat(model, x, anchor, sample));
      }
      rec.surrogate_value = pairwise_mean(buf_hat);
      rec.surrogate_value_prev = pairwise_mean(buf_prev);
      rec.surrogate_gap = rec.surrogate_value - pairwise_mean(buf_g);
    }

    x = std::move(next);
    trace.iterations = r;
    if (on_iterate) on_iterate(r, x);
    if (record) trace.records.push_back(rec);
    if (trace.stopped_early) break;
  }
  trace.final_point = std::move(x);
  return trace;
}

struct TightnessReport {
  bool a1_ok = false;
  bool a2_ok = false;
  /// |ghat(y, y) - g(y)|
  double a1_error = 0.0;
  /// ghat(x, y) - g(x); negative means the upper bound is violated.
  double a2_margin = 0.0;
};

/// Checks surrogate tightness at y and the upper-bound property at x.
template <SurrogateModel M>
TightnessReport check_tightness(const M& model, const typename M::Point& x,
                                const typename M::Point& y, const typename M::Sample& xi,
                                double tol) {
  TightnessReport rep;
  double gy = eval_g(model, y, xi);
  double gx = eval_g(model, x, xi);
  rep.a1_error = std::abs(eval_ghat(model, y, y, xi) - gy);
  rep.a2_margin = eval_ghat(model, x, y, xi) - gx;
  rep.a1_ok = rep.a1_error <= tol * (1.0 + std::abs(gy));
  rep.a2_ok = rep.a2_margin >= -tol * (1.0 + std::abs(gx));
  return rep;
}

inline double fd_step(const Eigen::VectorXd& x) { return 1e-5 * (1.0 + x.norm()); }

/// Strong convexity probe in direction d at x:
///   ghat(x + t d) - ghat(x) - t * D_d ghat(x) - (gamma/2) t^2 ||d||^2,
/// with the directional derivative taken by central differences. A modulus
/// gamma holds when the returned margin is >= 0 (up to round-off).
template <FlattenableModel M>
double strong_convexity_margin(const M& model, const typename M::Point& x,
                               const Eigen::VectorXd& d, double t, const typename M::Point& y,
                               const typename M::Sample& xi, double gamma) {
  Eigen::VectorXd xv = model.to_vector(x);
  double h = fd_step(xv) / std::max(1.0, d.norm());
  auto at = [&](const Eigen::VectorXd& v) {
    return eval_ghat(model, model.from_vector(v, x), y, xi);
  };
  double f0 = at(xv);
  double dir = (at(xv + h * d) - at(xv - h * d)) / (2.0 * h);
  return at(xv + t * d) - f0 - t * dir - 0.5 * gamma * t * t * d.squaredNorm();
}

/// Finite-difference gradient of x -> (1/n) sum_i g1(x, xi_i).
template <FlattenableModel M>
Eigen::VectorXd sample_average_gradient(const M& model, const typename M::Point& x,
                                        const std::vector<typename M::Sample>& samples) {
  Eigen::VectorXd xv = model.to_vector(x);
  double h = fd_step(xv);
  auto avg = [&](const Eigen::VectorXd& v) {
    auto p = model.from_vector(v, x);
    std::vector<double> vals;
    vals.reserve(samples.size());
    for (const auto& s : samples) vals.push_back(model.eval_g1(p, s));
    return pairwise_mean(vals);
  };
  Eigen::VectorXd grad(xv.size());
  for (Eigen::Index i = 0; i < xv.size(); ++i) {
    Eigen::VectorXd up = xv, dn = xv;
    up(i) += h;
    dn(i) -= h;
    grad(i) = (avg(up) - avg(dn)) / (2.0 * h);
  }
  return grad;
}

/// Projected-gradient stationarity measure ||x - P(x - grad)|| of the
/// sampled average over n fresh draws. The smooth part is differentiated
/// numerically; models with a nonsmooth g2 may provide
/// `g2_subgradient(x, smooth_grad)` returning the subgradient that best
/// cancels the smooth gradient (the minimum-norm element of the subdifferential
/// of the full objective). Zero exactly at stationary points of the average.
template <FlattenableModel M, class Sampler>
double stationarity_gap(const M& model, const typename M::Point& x, int n_samples,
                        Sampler&& sampler) {
  std::vector<typename M::Sample> samples;
  samples.reserve(static_cast<std::size_t>(std::max(0, n_samples)));
  for (int i = 0; i < n_samples; ++i) samples.push_back(sampler());
  Eigen::VectorXd grad = sample_average_gradient(model, x, samples);
  if constexpr (requires { model.g2_subgradient(x, grad); }) {
    grad += model.g2_subgradient(x, grad);
  }
  Eigen::VectorXd xv = model.to_vector(x);
  auto stepped = model.project(model.from_vector(xv - grad, x));
  return (xv - model.to_vector(stepped)).norm();
}

}  // namespace ssum
