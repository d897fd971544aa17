#include <gtest/gtest.h>

#include <sstream>

#include "ssum/rng.hpp"
#include "ssum/ssum.hpp"

using namespace ssum;
using Eigen::VectorXd;

namespace {

// g1 = 0.5 ||x - xi||^2 on the box [-1, 1]^n, surrogate adds (c/2) ||x - y||^2.
// Every term has Hessian (1 + c) I, so clamping the unconstrained minimizer
// is the exact constrained minimizer.
struct ToyModel {
  using Point = VectorXd;
  using Sample = VectorXd;
  double c = 0.5;
  VectorXd sum_xi, sum_y;
  int r = 0;

  explicit ToyModel(int n) : sum_xi(VectorXd::Zero(n)), sum_y(VectorXd::Zero(n)) {}

  double eval_g1(const Point& x, const Sample& xi) const { return 0.5 * (x - xi).squaredNorm(); }
  double eval_g2(const Point&, const Sample&) const { return 0.0; }
  double eval_ghat1(const Point& x, const Point& y, const Sample& xi) const {
    return eval_g1(x, xi) + 0.5 * c * (x - y).squaredNorm();
  }
  void observe(const Point& y, const Sample& xi) {
    sum_xi += xi;
    sum_y += y;
    ++r;
  }
  Point minimize_aggregate() const { return project((sum_xi + c * sum_y) / (r * (1.0 + c))); }
  Point project(const Point& x) const { return x.cwiseMax(-1.0).cwiseMin(1.0); }
  double distance(const Point& a, const Point& b) const { return (a - b).norm(); }
  VectorXd to_vector(const Point& x) const { return x; }
  Point from_vector(const VectorXd& v, const Point&) const { return v; }
};

static_assert(FlattenableModel<ToyModel>);

}  // namespace

TEST(SsumCore, IteratesMatchHandRecursion) {
  const int n = 3;
  ToyModel model(n);
  RngStream rng(1);
  std::vector<VectorXd> samples;
  for (int i = 0; i < 50; ++i) samples.push_back(0.8 * rng.normal_vector(n));
  std::size_t next = 0;
  auto sampler = [&] { return samples[next++]; };

  RunOptions opts;
  opts.r_max = 50;
  std::vector<VectorXd> xs;
  VectorXd x0 = VectorXd::Constant(n, 0.3);
  auto trace = run_ssum(model, sampler, x0, opts, [&](int, const VectorXd& x) { xs.push_back(x); });

  // oracle: recompute the aggregate minimizer from the stored history
  VectorXd prev = x0, sx = VectorXd::Zero(n), sy = VectorXd::Zero(n);
  for (int r = 1; r <= 50; ++r) {
    sx += samples[r - 1];
    sy += prev;
    VectorXd expect = ((sx + 0.5 * sy) / (1.5 * r)).cwiseMax(-1.0).cwiseMin(1.0);
    ASSERT_LT((xs[r - 1] - expect).norm(), 1e-14) << "r=" << r;
    EXPECT_NEAR(trace.records[r - 1].step_norm, (expect - prev).norm(), 1e-14);
    prev = expect;
  }
  EXPECT_EQ(trace.iterations, 50);
  EXPECT_EQ(trace.records.size(), 50u);
}

TEST(SsumCore, SurrogateGapAndDescent) {
  const int n = 2;
  ToyModel model(n);
  RngStream rng(2);
  std::vector<VectorXd> anchors, samples;
  auto sampler = [&] {
    samples.push_back(0.5 * rng.normal_vector(n));
    return samples.back();
  };
  RunOptions opts;
  opts.r_max = 40;
  opts.track_gap = true;
  VectorXd x0 = VectorXd::Zero(n);
  anchors.push_back(x0);
  auto trace = run_ssum(model, sampler, x0, opts,
                        [&](int, const VectorXd& x) { anchors.push_back(x); });
  for (const auto& rec : trace.records) {
    // gap = (c / 2r) sum_i ||x^r - x^{i-1}||^2
    double acc = 0.0;
    for (int i = 0; i < rec.r; ++i) acc += (anchors[rec.r] - anchors[i]).squaredNorm();
    EXPECT_NEAR(rec.surrogate_gap, 0.25 * acc / rec.r, 1e-12);
    EXPECT_GE(rec.surrogate_gap, -1e-14);
    EXPECT_LE(rec.surrogate_value, rec.surrogate_value_prev + 1e-14);
  }
}

TEST(SsumCore, TraceEveryAndEarlyStop) {
  ToyModel model(2);
  VectorXd fixed = VectorXd::Constant(2, 0.25);
  RunOptions opts;
  opts.r_max = 1000;
  opts.trace_every = 7;
  opts.early_stop = true;
  opts.early_stop_tol = 1e-10;
  opts.early_stop_window = 10;
  auto trace = run_ssum(model, [&] { return fixed; }, fixed, opts);
  // x0 is already the minimizer: every step is zero
  EXPECT_TRUE(trace.stopped_early);
  EXPECT_EQ(trace.iterations, 10);
  EXPECT_EQ(trace.records.back().r, 10);
  EXPECT_EQ(trace.records.front().r, 7);
}

TEST(SsumCore, RejectsInfeasibleStartAndBadRmax) {
  ToyModel model(2);
  RunOptions opts;
  VectorXd outside = VectorXd::Constant(2, 3.0);
  auto sampler = [] { return VectorXd::Zero(2); };
  EXPECT_THROW(run_ssum(model, sampler, outside, opts), InfeasibleStart);
  opts.r_max = 0;
  EXPECT_THROW(run_ssum(model, sampler, VectorXd::Zero(2), opts), Error);
}

TEST(SsumCore, TightnessAndConvexityProbes) {
  ToyModel model(3);
  RngStream rng(3);
  for (int i = 0; i < 100; ++i) {
    VectorXd x = model.project(rng.normal_vector(3));
    VectorXd y = model.project(rng.normal_vector(3));
    VectorXd xi = rng.normal_vector(3);
    auto rep = check_tightness(model, x, y, xi, 1e-12);
    EXPECT_TRUE(rep.a1_ok && rep.a2_ok);
    EXPECT_NEAR(rep.a2_margin, 0.25 * (x - y).squaredNorm(), 1e-12);
    VectorXd d = rng.normal_vector(3);
    // modulus is exactly 1 + c
    EXPECT_GE(strong_convexity_margin(model, x, d, 0.3, y, xi, 1.5), -1e-8);
    EXPECT_LT(strong_convexity_margin(model, x, d, 0.3, y, xi, 2.5), 0.0);
  }
}

TEST(SsumCore, StationarityGapAtSampleMean) {
  ToyModel model(2);
  VectorXd xi = VectorXd::Constant(2, 0.4);
  EXPECT_LT(stationarity_gap(model, xi, 5, [&] { return xi; }), 1e-8);
  VectorXd far = VectorXd::Constant(2, -0.4);
  EXPECT_NEAR(stationarity_gap(model, far, 5, [&] { return xi; }), (xi - far).norm(), 1e-6);
  // minimizer clipped to the boundary is stationary
  VectorXd big = VectorXd::Constant(2, 5.0);
  EXPECT_LT(stationarity_gap(model, VectorXd::Constant(2, 1.0), 3, [&] { return big; }), 1e-8);
}

TEST(SsumCore, StepNormCheck) {
  std::vector<TraceRecord> recs;
  for (int r = 1; r <= 200; ++r) {
    TraceRecord t;
    t.r = r;
    t.step_norm = 2.0 / r;
    recs.push_back(t);
  }
  auto rep = step_norm_bound_check(recs, 50, 5.0, 5);
  EXPECT_TRUE(rep.ok);
  EXPECT_NEAR(rep.constant, 2.0, 1e-12);
  recs.back().step_norm = 1.0;  // 200 * 1 > 5 * 2
  EXPECT_FALSE(step_norm_bound_check(recs, 50, 5.0, 5).ok);
  EXPECT_THROW(step_norm_bound_check(std::span(recs).first(100), 50, 5.0), TraceTooShort);
}

TEST(SsumCore, TraceCsv) {
  TraceRecord t;
  t.r = 1;
  t.step_norm = 0.5;
  t.surrogate_gap = 0.25;
  t.sampled_obj = -1.0;
  std::vector<TraceRecord> v{t};
  std::string csv = trace_csv(v);
  EXPECT_EQ(csv, std::string(kTraceCsvHeader) + "\n1,0.5,0.25,-1\n");
}
