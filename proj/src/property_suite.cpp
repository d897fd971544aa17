#include "ssum/property_suite.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "ssum/dictlearn.hpp"
#include "ssum/numeric.hpp"
#include "ssum/sg.hpp"
#include "ssum/ssum.hpp"

namespace ssum::props {

using wmmse::ChannelModel;
using wmmse::NetworkConfig;
using wmmse::Precoders;

namespace {

// Must dominate the curvature of the weighted-MSE bound, which grows with
// the channel gains (|H|^2 is around 30 at 15 dB), or nothing is violated.
constexpr double kNegativeRho = -1000.0;

void tally(TightnessSweep& sw, const TightnessReport& rep, double gx, double gy) {
  ++sw.samples;
  if (!rep.a1_ok) ++sw.a1_failures;
  if (!rep.a2_ok) ++sw.a2_failures;
  sw.max_a1_rel = std::max(sw.max_a1_rel, rep.a1_error / (1.0 + std::abs(gy)));
  sw.min_a2_rel = std::min(sw.min_a2_rel, rep.a2_margin / (1.0 + std::abs(gx)));
}

Eigen::VectorXd unit_direction(RngStream& rng, Eigen::Index n) {
  Eigen::VectorXd d = rng.normal_vector(n);
  return d / d.norm();
}

double median(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

CheckResult at_most(std::string name, double measured, double limit, std::string detail = {}) {
  return {std::move(name), measured <= limit, measured, limit, std::move(detail)};
}

CheckResult at_least(std::string name, double measured, double limit, std::string detail = {}) {
  return {std::move(name), measured >= limit, measured, limit, std::move(detail)};
}

std::string sweep_detail(const TightnessSweep& s) {
  std::ostringstream o;
  o << s.samples << " triples, " << s.a1_failures << " A1 and " << s.a2_failures
    << " A2 failures, max A1 rel err " << format_double(s.max_a1_rel);
  return o.str();
}

}  // namespace

bool PropertyReport::all_passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.passed; });
}

std::string PropertyReport::text() const {
  std::ostringstream o;
  for (const auto& c : checks) {
    o << (c.passed ? "PASS " : "FAIL ") << c.name << " measured=" << format_double(c.measured)
      << " threshold=" << format_double(c.threshold);
    if (!c.detail.empty()) o << " (" << c.detail << ")";
    o << "\n";
  }
  o << (all_passed() ? "all checks passed" : "some checks failed") << "\n";
  return o.str();
}

TightnessSweep wmmse_tightness(const NetworkConfig& net, int samples, double tol,
                               std::uint64_t seed, std::optional<double> rho) {
  RngStream rng(seed, 11);
  ChannelModel model = ChannelModel::generate(net, rng);
  wmmse::WmmseModel surrogate(net, rho.value_or(net.rho));
  TightnessSweep sw;
  for (int i = 0; i < samples; ++i) {
    Precoders y = wmmse::random_precoders(net, rng);
    Precoders x = wmmse::random_precoders(net, rng);
    if (i % 2 == 1) {
      // near the anchor, where a wrong proximal sign shows first
      double eps = std::pow(10.0, -rng.uniform(1.0, 3.0));
      for (std::size_t u = 0; u < x.size(); ++u) x[u] = y[u] + eps * x[u];
      x = wmmse::project_power(net, x);
    }
    auto h = model.sample(rng);
    auto rep = check_tightness(surrogate, x, y, h, tol);
    tally(sw, rep, eval_g(surrogate, x, h), eval_g(surrogate, y, h));
  }
  return sw;
}

TightnessSweep dictionary_tightness(const exp::DictionaryScenario& s, int samples, double tol,
                                    std::uint64_t seed) {
  RngStream rng(seed, 12);
  auto source = dict::PlantedSource::random(s.dim, s.atoms, s.sparsity, s.noise, rng);
  dict::DictionaryModel model(dict::random_dictionary(s.dim, s.atoms, rng), s.lambda,
                              s.gamma_prox);
  TightnessSweep sw;
  for (int i = 0; i < samples; ++i) {
    Eigen::MatrixXd y_anchor = dict::random_dictionary(s.dim, s.atoms, rng);
    Eigen::MatrixXd x = dict::project_columns(rng.normal_matrix(s.dim, s.atoms));
    if (i % 2 == 1) x = dict::project_columns(y_anchor + 0.01 * x);
    Eigen::VectorXd sig = source.sample(rng);
    auto rep = check_tightness(model, x, y_anchor, sig, tol);
    tally(sw, rep, eval_g(model, x, sig), eval_g(model, y_anchor, sig));
  }
  return sw;
}

TightnessSweep sg_tightness(int samples, double tol, std::uint64_t seed, double lipschitz_scale) {
  RngStream rng(seed, 13);
  const int n = 5;
  sg::SmoothProblem problem = sg::least_squares_problem(n, 1.0);
  sg::SgModel model(problem, problem.lipschitz * lipschitz_scale);
  Eigen::VectorXd x_true = rng.normal_vector(n);
  auto sampler = sg::regression_sampler(x_true, 1.0, 0.1, rng);
  TightnessSweep sw;
  for (int i = 0; i < samples; ++i) {
    Eigen::VectorXd y = rng.normal_vector(n);
    Eigen::VectorXd x = y + rng.normal_vector(n);
    Eigen::VectorXd xi = sampler();
    if (i % 2 == 1) x = y + xi.head(n);  // along the sample direction
    auto rep = check_tightness(model, x, y, xi, tol);
    tally(sw, rep, eval_g(model, x, xi), eval_g(model, y, xi));
  }
  return sw;
}

double wmmse_convexity(const NetworkConfig& net, int probes, std::uint64_t seed) {
  RngStream rng(seed, 21);
  ChannelModel model = ChannelModel::generate(net, rng);
  wmmse::WmmseModel surrogate(net);
  double worst = std::numeric_limits<double>::infinity();
  for (int i = 0; i < probes; ++i) {
    Precoders x = wmmse::random_precoders(net, rng);
    Precoders y = wmmse::random_precoders(net, rng);
    auto h = model.sample(rng);
    Eigen::VectorXd d = unit_direction(rng, wmmse::flatten(x).size());
    double t = rng.uniform(0.01, 1.0);
    worst = std::min(worst, strong_convexity_margin(surrogate, x, d, t, y, h, net.rho));
  }
  return worst;
}

double dictionary_convexity(const exp::DictionaryScenario& s, int probes, std::uint64_t seed) {
  RngStream rng(seed, 22);
  auto source = dict::PlantedSource::random(s.dim, s.atoms, s.sparsity, s.noise, rng);
  dict::DictionaryModel model(dict::random_dictionary(s.dim, s.atoms, rng), s.lambda,
                              s.gamma_prox);
  double worst = std::numeric_limits<double>::infinity();
  for (int i = 0; i < probes; ++i) {
    Eigen::MatrixXd x = dict::random_dictionary(s.dim, s.atoms, rng);
    Eigen::MatrixXd y = dict::random_dictionary(s.dim, s.atoms, rng);
    Eigen::VectorXd sig = source.sample(rng);
    Eigen::VectorXd d = unit_direction(rng, x.size());
    double t = rng.uniform(0.01, 1.0);
    worst = std::min(worst, strong_convexity_margin(model, x, d, t, y, sig, s.gamma_prox));
  }
  return worst;
}

SgEquivalence sg_equivalence(int iterations, std::uint64_t seed) {
  SgEquivalence out;
  const int n = 5;
  const std::vector<sg::SmoothProblem> problems{sg::least_squares_problem(n, 2.0),
                                                sg::logistic_problem(n, 2.0),
                                                sg::cauchy_problem(n, 2.0)};
  for (std::size_t p = 0; p < problems.size(); ++p) {
    RngStream rng(seed, 31 + p);
    Eigen::VectorXd x_true = rng.normal_vector(n);
    auto draw = sg::regression_sampler(x_true, 2.0, 0.5, rng);
    std::vector<Eigen::VectorXd> samples;
    for (int i = 0; i < iterations; ++i) samples.push_back(draw());
    Eigen::VectorXd x0 = rng.normal_vector(n);

    std::size_t a = 0;
    auto direct = sg::sg_run(problems[p], x0, iterations, [&] { return samples[a++]; });
    std::size_t b = 0;
    sg::SgModel model(problems[p]);
    RunOptions opts;
    opts.r_max = iterations;
    run_ssum(model, [&] { return samples[b++]; }, x0, opts,
             [&](int r, const Eigen::VectorXd& x) {
               double diff = (x - direct.iterates[static_cast<std::size_t>(r)]).cwiseAbs().maxCoeff();
               out.max_diff = std::max(out.max_diff, diff);
             });
  }

  {
    RngStream rng(seed, 35);
    sg::SmoothProblem q = sg::quadratic_mean_problem(n);
    Eigen::VectorXd center = rng.normal_vector(n);
    std::vector<Eigen::VectorXd> samples;
    for (int i = 0; i < iterations; ++i) samples.push_back(center + rng.normal_vector(n));
    std::size_t a = 0;
    sg::SgModel model(q);
    RunOptions opts;
    opts.r_max = iterations;
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(n);
    run_ssum(model, [&] { return samples[a++]; }, rng.normal_vector(n), opts,
             [&](int r, const Eigen::VectorXd& x) {
               sum += samples[static_cast<std::size_t>(r - 1)];
               Eigen::VectorXd mean = sum / r;
               out.mean_diff = std::max(out.mean_diff, (x - mean).cwiseAbs().maxCoeff());
             });
  }

  {
    RngStream rng(seed, 36);
    sg::SmoothProblem p = sg::least_squares_problem(n, 1.0);
    p.lambda = 0.05;
    Eigen::VectorXd x_true = rng.normal_vector(n);
    x_true(0) = 0.0;
    auto draw = sg::regression_sampler(x_true, 1.0, 0.2, rng);
    std::vector<Eigen::VectorXd> samples;
    const int m = std::min(iterations, 200);
    for (int i = 0; i < m; ++i) samples.push_back(draw());
    Eigen::VectorXd x0 = Eigen::VectorXd::Zero(n);
    std::size_t a = 0;
    auto rec = sg::l1_ssum_sg(p, x0, m, [&] { return samples[a++]; });
    std::size_t b = 0;
    sg::SgModel model(p);
    RunOptions opts;
    opts.r_max = m;
    run_ssum(model, [&] { return samples[b++]; }, x0, opts,
             [&](int r, const Eigen::VectorXd& x) {
               double diff = (x - rec.iterates[static_cast<std::size_t>(r)]).cwiseAbs().maxCoeff();
               out.l1_diff = std::max(out.l1_diff, diff);
             });
  }
  return out;
}

LemmaStudy wmmse_lemma_study(const NetworkConfig& net, int seeds, int iterations,
                             std::uint64_t master_seed) {
  LemmaStudy st;
  st.min_gap = std::numeric_limits<double>::infinity();
  for (int s = 0; s < seeds; ++s) {
    const std::uint64_t seed = derive_seed(master_seed, static_cast<std::uint64_t>(s));
    RngStream layout(seed, 1);
    ChannelModel model = ChannelModel::generate(net, layout);
    RngStream init(seed, 2);
    Precoders x0 = wmmse::random_precoders(net, init);
    RngStream draws(seed, 3);

    wmmse::WmmseModel surrogate(net);
    RunOptions opts;
    opts.r_max = iterations;
    opts.track_gap = true;
    auto trace = run_ssum(surrogate, [&] { return model.sample(draws); }, x0, opts,
                          [&](int, const Precoders& v) {
                            auto powers = wmmse::cell_powers(net, v);
                            const auto& mu = surrogate.last_mu();
                            for (int k = 0; k < net.cells; ++k) {
                              const double pk = net.power[static_cast<std::size_t>(k)];
                              const double pw = powers[static_cast<std::size_t>(k)];
                              st.max_power_ratio = std::max(st.max_power_ratio, pw / pk);
                              st.max_slackness = std::max(
                                  st.max_slackness,
                                  mu[static_cast<std::size_t>(k)] * std::abs(pw - pk) / pk);
                            }
                          });
    double early = std::numeric_limits<double>::quiet_NaN();
    double late = std::numeric_limits<double>::quiet_NaN();
    for (const auto& rec : trace.records) {
      st.min_gap = std::min(st.min_gap, rec.surrogate_gap);
      double scale = 1e-10 * (1.0 + std::abs(rec.surrogate_value_prev));
      if (rec.surrogate_value > rec.surrogate_value_prev + scale) ++st.descent_violations;
      if (rec.r == 10) early = rec.surrogate_gap;
      if (rec.r == iterations) late = rec.surrogate_gap;
    }
    st.gap_ratios.push_back(late / early);
    auto rep = step_norm_bound_check(trace.records, 50, 5.0, 5);
    st.worst_step_ratio = std::max(st.worst_step_ratio,
                                   rep.constant > 0.0 ? rep.tail_max / rep.constant
                                                      : std::numeric_limits<double>::infinity());
    st.step_reports.push_back(rep);
    st.traces.push_back(std::move(trace.records));
  }
  st.median_ratio = median(st.gap_ratios);
  return st;
}

DictionaryStudy dictionary_study(const exp::DictionaryScenario& s, int iterations, int n_eval,
                                 std::uint64_t seed) {
  RngStream src_rng(seed, 1);
  auto source = dict::PlantedSource::random(s.dim, s.atoms, s.sparsity, s.noise, src_rng);
  RngStream eval_rng(seed, 2);
  std::vector<Eigen::VectorXd> eval;
  for (int i = 0; i < n_eval; ++i) eval.push_back(source.sample(eval_rng));
  RngStream init_rng(seed, 3);
  Eigen::MatrixXd d0 = dict::random_dictionary(s.dim, s.atoms, init_rng);
  RngStream run_rng(seed, 4);

  DictionaryStudy st;
  st.initial_loss = dict::mean_fitting_loss(d0, eval, s.lambda);
  RunOptions opts;
  opts.r_max = iterations;
  opts.trace_every = iterations;
  dict::DictionaryModel model(d0, s.lambda, s.gamma_prox);
  auto trace = dict::online_dictionary_learning(
      source, d0, s.lambda, s.gamma_prox, run_rng, opts,
      [&](int, const Eigen::MatrixXd& d) {
        st.max_column_norm = std::max(st.max_column_norm, d.colwise().norm().maxCoeff());
      },
      &model);
  st.final_loss = dict::mean_fitting_loss(trace.final_point, eval, s.lambda);
  st.max_kkt = model.max_kkt_residual();
  for (const auto& y : eval) {
    Eigen::VectorXd a = dict::lasso(trace.final_point, y, s.lambda);
    st.max_kkt = std::max(st.max_kkt, dict::lasso_kkt_residual(trace.final_point, y, a, s.lambda));
  }
  return st;
}

PropertyReport property_suite(const exp::ExperimentConfig& cfg) {
  const exp::PropertyParams& p = cfg.props;
  const NetworkConfig& net = cfg.wmmse.net;
  const std::uint64_t seed = cfg.seed;
  PropertyReport rep;

  auto add_sweep = [&](const std::string& name, const TightnessSweep& sw, double tol) {
    CheckResult c = at_least(name, sw.min_a2_rel, -tol, sweep_detail(sw));
    c.passed = sw.ok();
    rep.checks.push_back(c);
  };

  std::optional<double> rho;
  if (p.has_rho_override) rho = p.rho_override;
  add_sweep("tightness_wmmse", wmmse_tightness(net, p.tightness_samples, p.tightness_tol, seed, rho),
            p.tightness_tol);
  add_sweep("tightness_dictionary",
            dictionary_tightness(cfg.dict, p.tightness_samples, p.tightness_tol, seed),
            p.tightness_tol);
  add_sweep("tightness_sg", sg_tightness(p.tightness_samples, p.tightness_tol, seed, p.lipschitz_scale),
            p.tightness_tol);

  {
    auto neg = wmmse_tightness(net, p.tightness_samples, p.tightness_tol, seed, kNegativeRho);
    rep.checks.push_back(at_least("negative_control_wmmse_rho", neg.a2_failures, 1,
                                  "A2 violations found with rho = " + format_double(kNegativeRho)));
    auto neg_l = sg_tightness(p.tightness_samples, p.tightness_tol, seed, 0.5);
    rep.checks.push_back(at_least("negative_control_sg_lipschitz", neg_l.a2_failures, 1,
                                  "A2 violations found with L halved"));
  }

  rep.checks.push_back(at_least("convexity_wmmse", wmmse_convexity(net, p.convexity_probes, seed),
                                -p.convexity_tol, "modulus rho"));
  rep.checks.push_back(at_least("convexity_dictionary",
                                dictionary_convexity(cfg.dict, p.convexity_probes, seed),
                                -p.convexity_tol, "modulus gamma_prox"));

  auto eq = sg_equivalence(p.sg_iterations, seed);
  rep.checks.push_back(at_most("sg_equivalence", eq.max_diff, 1e-10, "max coordinate difference"));
  rep.checks.push_back(at_most("sg_running_mean", eq.mean_diff, 1e-12));
  rep.checks.push_back(at_most("l1_recursion_vs_aggregate", eq.l1_diff, 1e-8));

  auto lem = wmmse_lemma_study(net, p.lemma_seeds, p.lemma_iterations, seed);
  rep.checks.push_back(at_least("surrogate_gap_nonnegative", lem.min_gap, -1e-8));
  rep.checks.push_back(at_most("surrogate_gap_decay", lem.median_ratio, 0.1,
                               "median over seeds of gap(last) / gap(10)"));
  rep.checks.push_back(at_most("aggregate_descent", lem.descent_violations, 0));
  {
    double c = 0.0, tail = 0.0;
    for (const auto& s : lem.step_reports) {
      c = std::max(c, s.constant);
      tail = std::max(tail, s.tail_max);
    }
    std::ostringstream d;
    d << "C=" << format_double(c) << " tail_max=" << format_double(tail)
      << " (worst seed ratio shown)";
    rep.checks.push_back(at_most("step_norm_decay", lem.worst_step_ratio, 5.0, d.str()));
  }
  rep.checks.push_back(at_most("power_feasibility", lem.max_power_ratio, 1.0 + 1e-6));
  rep.checks.push_back(at_most("complementary_slackness", lem.max_slackness, 1e-6));

  auto ds = dictionary_study(cfg.dict, p.dict_iterations, 500, seed);
  rep.checks.push_back(at_most("dictionary_loss_ratio", ds.final_loss / ds.initial_loss, 0.5));
  rep.checks.push_back(at_most("lasso_kkt", ds.max_kkt, 1e-8));
  rep.checks.push_back(at_most("dictionary_unit_ball", ds.max_column_norm, 1.0 + 1e-12));
  return rep;
}

}  // namespace ssum::props
