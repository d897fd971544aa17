#include "ssum/experiment.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <exception>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <thread>

#include "ssum/dictlearn.hpp"
#include "ssum/numeric.hpp"
#include "ssum/sg.hpp"

namespace ssum::exp {

using wmmse::ChannelModel;
using wmmse::ChannelRealization;
using wmmse::NetworkConfig;
using wmmse::Precoders;

namespace {

using Clock = std::chrono::steady_clock;

std::uint64_t label(StreamLabel l) { return static_cast<std::uint64_t>(l); }

// Every method name ever accepted; position fixes the method's seed label.
const std::vector<std::string>& method_catalog() {
  static const std::vector<std::string> all{
      "stochastic_wmmse", "one_sample_wmmse", "mean_wmmse", "sg",
      "ssum_dictionary",  "ssum_sg",          "projected_ssum_sg", "l1_ssum_sg",
      "projected_sg"};
  return all;
}

Scenario parse_scenario(const std::string& s) {
  if (s == "wmmse") return Scenario::Wmmse;
  if (s == "dictionary") return Scenario::Dictionary;
  if (s == "sg") return Scenario::Sg;
  throw ConfigError("unknown scenario '" + s + "' (expected wmmse, dictionary or sg)");
}

wmmse::MeanVariant parse_variant(const std::string& s) {
  if (s == "strict") return wmmse::MeanVariant::Strict;
  if (s == "pathloss_magnitude") return wmmse::MeanVariant::PathLossMagnitude;
  throw ConfigError("unknown mean_variant '" + s + "' (expected strict or pathloss_magnitude)");
}

std::string variant_name(wmmse::MeanVariant v) {
  return v == wmmse::MeanVariant::Strict ? "strict" : "pathloss_magnitude";
}

void require(bool ok, const std::string& what) {
  if (!ok) throw ConfigError(what);
}

// Scores a point; returns (value, standard error).
template <class Fn>
std::pair<double, double> score_values(std::size_t n, Fn&& value_of) {
  std::vector<double> vals(n);
  for (std::size_t i = 0; i < n; ++i) vals[i] = value_of(i);
  return {pairwise_mean(vals), standard_error(vals)};
}

// Collects rows for one method at the scheduled iterations.
class Recorder {
 public:
  Recorder(std::string method, const std::vector<int>& schedule)
      : method_(std::move(method)), schedule_(schedule.begin(), schedule.end()),
        start_(Clock::now()) {}

  bool wants(int r) const { return schedule_.count(r) != 0; }

  template <class Scorer>
  void maybe_score(int r, Scorer&& scorer) {
    if (!wants(r)) return;
    auto t0 = Clock::now();
    auto [value, se] = scorer();
    auto t1 = Clock::now();
    ResultRow row;
    row.method = method_;
    row.iteration = r;
    row.value = value;
    row.stderr_value = se;
    row.wall_seconds = std::chrono::duration<double>(t0 - start_).count() - scoring_;
    scoring_ += std::chrono::duration<double>(t1 - t0).count();
    rows_.push_back(row);
  }

  std::vector<ResultRow> take() { return std::move(rows_); }

 private:
  std::string method_;
  std::set<int> schedule_;
  Clock::time_point start_;
  double scoring_ = 0.0;
  std::vector<ResultRow> rows_;
};

// Runs fn(i) for i in [0, n) on up to `threads` workers. Each i owns its
// output slot, so results do not depend on the worker count.
template <class Fn>
void parallel_for(std::size_t n, int threads, Fn&& fn) {
  const std::size_t workers = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(1, threads)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::exception_ptr> errors(n);
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (std::size_t i = w; i < n; i += workers) {
        try {
          fn(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

// ---- WMMSE scenario -------------------------------------------------------

// Largest secant slope ||grad g1(x) - grad g1(y)|| / ||x - y|| over random
// feasible pairs and channel draws; a lower estimate of the gradient's
// Lipschitz constant over the feasible set.
double estimate_gradient_lipschitz(const NetworkConfig& net, const ChannelModel& model,
                                   RngStream& rng, int pairs) {
  double best = 0.0;
  for (int i = 0; i < pairs; ++i) {
    ChannelRealization h = model.sample(rng);
    Precoders x = wmmse::random_precoders(net, rng);
    Precoders y = wmmse::random_precoders(net, rng);
    Eigen::VectorXd gx = 2.0 * wmmse::flatten(wmmse::g1_gradient(net, x, h));
    Eigen::VectorXd gy = 2.0 * wmmse::flatten(wmmse::g1_gradient(net, y, h));
    double dist = wmmse::distance(x, y);
    if (dist > 0.0) best = std::max(best, (gx - gy).norm() / dist);
  }
  return best > 0.0 ? best : 1.0;
}

std::vector<ResultRow> run_wmmse_method(const ExperimentConfig& cfg, const std::string& method,
                                        const ChannelModel& model,
                                        const std::vector<ChannelRealization>& eval_set,
                                        const Precoders& x0, const std::vector<int>& schedule) {
  const NetworkConfig& net = model.config();
  RngStream rng(method_seed(cfg.seed, method));
  Recorder rec(method, schedule);
  auto score = [&](const Precoders& v) {
    return [&] {
      return score_values(eval_set.size(),
                          [&](std::size_t i) { return wmmse::sum_rate(net, v, eval_set[i]); });
    };
  };
  rec.maybe_score(0, score(x0));

  if (method == "stochastic_wmmse") {
    RunOptions opts;
    opts.r_max = cfg.r_max;
    opts.trace_every = cfg.r_max;
    wmmse::WmmseModel surrogate(net);
    run_ssum(surrogate, [&] { return model.sample(rng); }, x0, opts,
             [&](int r, const Precoders& v) { rec.maybe_score(r, score(v)); });
  } else if (method == "one_sample_wmmse" || method == "mean_wmmse") {
    ChannelRealization h = method == "one_sample_wmmse"
                               ? model.sample(rng)
                               : model.mean_channels(cfg.wmmse.mean_variant);
    Precoders v = x0;
    for (int r = 1; r <= cfg.r_max; ++r) {
      v = wmmse::deterministic_wmmse(net, h, v, 1).v;
      rec.maybe_score(r, score(v));
    }
  } else if (method == "sg") {
    // Projected stochastic gradient descent on g1 = -sum rate with step 1/(rL).
    double step0 = cfg.wmmse.sg_step;
    if (step0 <= 0.0) {
      RngStream probe = rng.child(1);
      step0 = 1.0 / estimate_gradient_lipschitz(net, model, probe, 20);
    }
    Precoders v = x0;
    for (int r = 1; r <= cfg.r_max; ++r) {
      ChannelRealization h = model.sample(rng);
      Precoders grad = wmmse::g1_gradient(net, v, h);
      double step = cfg.wmmse.sg_constant_step ? step0 : step0 / r;
      // the real gradient is twice the Wirtinger one
      for (std::size_t u = 0; u < v.size(); ++u) v[u] -= (2.0 * step) * grad[u];
      v = wmmse::project_power(net, v);
      rec.maybe_score(r, score(v));
    }
  } else {
    throw ConfigError("method '" + method + "' does not apply to the wmmse scenario");
  }
  return rec.take();
}

std::vector<std::vector<ResultRow>> run_wmmse(const ExperimentConfig& cfg,
                                              const std::vector<int>& schedule) {
  RngStream layout_rng(derive_seed(cfg.seed, label(StreamLabel::Layout)));
  ChannelModel model = ChannelModel::generate(cfg.wmmse.net, layout_rng);
  RngStream eval_rng(derive_seed(cfg.seed, label(StreamLabel::Evaluation)));
  auto eval_set = wmmse::draw_evaluation_set(model, cfg.n_mc, eval_rng);
  RngStream init_rng(derive_seed(cfg.seed, label(StreamLabel::Init)));
  Precoders x0 = wmmse::random_precoders(cfg.wmmse.net, init_rng);

  std::vector<std::vector<ResultRow>> out(cfg.methods.size());
  parallel_for(cfg.methods.size(), cfg.threads, [&](std::size_t i) {
    out[i] = run_wmmse_method(cfg, cfg.methods[i], model, eval_set, x0, schedule);
  });
  return out;
}

// ---- dictionary scenario --------------------------------------------------

std::unique_ptr<dict::SignalSource> make_source(const DictionaryScenario& s, std::uint64_t seed) {
  if (!s.corpus_path.empty()) {
    bool csv = std::filesystem::path(s.corpus_path).extension() == ".csv";
    auto rows = csv ? dict::load_matrix_csv(s.corpus_path)
                    : dict::load_corpus_binary(s.corpus_path, s.corpus_dim);
    return std::make_unique<dict::CorpusSource>(std::move(rows));
  }
  RngStream rng(derive_seed(seed, label(StreamLabel::Problem)));
  return std::make_unique<dict::PlantedSource>(
      dict::PlantedSource::random(s.dim, s.atoms, s.sparsity, s.noise, rng));
}

std::vector<std::vector<ResultRow>> run_dictionary(const ExperimentConfig& cfg,
                                                   const std::vector<int>& schedule) {
  const DictionaryScenario& s = cfg.dict;
  auto source = make_source(s, cfg.seed);
  RngStream eval_rng(derive_seed(cfg.seed, label(StreamLabel::Evaluation)));
  std::vector<Eigen::VectorXd> eval_set;
  for (int i = 0; i < cfg.n_mc; ++i) eval_set.push_back(source->sample(eval_rng));
  RngStream init_rng(derive_seed(cfg.seed, label(StreamLabel::Init)));
  Eigen::MatrixXd d0 = dict::random_dictionary(source->dimension(), s.atoms, init_rng);

  std::vector<std::vector<ResultRow>> out(cfg.methods.size());
  parallel_for(cfg.methods.size(), cfg.threads, [&](std::size_t i) {
    const std::string& method = cfg.methods[i];
    if (method != "ssum_dictionary") {
      throw ConfigError("method '" + method + "' does not apply to the dictionary scenario");
    }
    RngStream rng(method_seed(cfg.seed, method));
    Recorder rec(method, schedule);
    auto score = [&](const Eigen::MatrixXd& d) {
      return [&] {
        return score_values(eval_set.size(), [&](std::size_t j) {
          return dict::fitting_loss(d, eval_set[j], s.lambda);
        });
      };
    };
    rec.maybe_score(0, score(d0));
    RunOptions opts;
    opts.r_max = cfg.r_max;
    opts.trace_every = cfg.r_max;
    dict::online_dictionary_learning(*source, d0, s.lambda, s.gamma_prox, rng, opts,
                                     [&](int r, const Eigen::MatrixXd& d) {
                                       rec.maybe_score(r, score(d));
                                     });
    out[i] = rec.take();
  });
  return out;
}

// ---- SG scenario ------------------------------------------------------------

sg::SmoothProblem make_problem(const SgScenario& s) {
  sg::SmoothProblem p;
  if (s.problem == "quadratic_mean") p = sg::quadratic_mean_problem(s.dim);
  else if (s.problem == "least_squares") p = sg::least_squares_problem(s.dim, s.row_norm);
  else if (s.problem == "logistic") p = sg::logistic_problem(s.dim, s.row_norm);
  else if (s.problem == "cauchy") p = sg::cauchy_problem(s.dim, s.row_norm);
  else throw ConfigError("unknown sg_problem '" + s.problem + "'");
  p.lambda = s.lambda;
  if (s.box) p.projection = sg::box_projection(s.box_lo, s.box_hi);
  return p;
}

sg::Sampler make_sampler(const SgScenario& s, const Eigen::VectorXd& x_true, RngStream& rng) {
  if (s.problem == "quadratic_mean") {
    return [x_true, noise = s.noise, &rng]() {
      return Eigen::VectorXd(x_true + noise * rng.normal_vector(x_true.size()));
    };
  }
  return sg::regression_sampler(x_true, s.row_norm, s.noise, rng);
}

std::vector<std::vector<ResultRow>> run_sg(const ExperimentConfig& cfg,
                                           const std::vector<int>& schedule) {
  const SgScenario& s = cfg.sg;
  sg::SmoothProblem problem = make_problem(s);
  RngStream problem_rng(derive_seed(cfg.seed, label(StreamLabel::Problem)));
  Eigen::VectorXd x_true = problem_rng.normal_vector(s.dim);
  RngStream eval_rng(derive_seed(cfg.seed, label(StreamLabel::Evaluation)));
  sg::Sampler eval_sampler = make_sampler(s, x_true, eval_rng);
  std::vector<Eigen::VectorXd> eval_set;
  for (int i = 0; i < cfg.n_mc; ++i) eval_set.push_back(eval_sampler());
  Eigen::VectorXd x0 = problem.project(Eigen::VectorXd::Zero(s.dim));

  std::vector<std::vector<ResultRow>> out(cfg.methods.size());
  parallel_for(cfg.methods.size(), cfg.threads, [&](std::size_t i) {
    const std::string& method = cfg.methods[i];
    RngStream rng(method_seed(cfg.seed, method));
    sg::Sampler sampler = make_sampler(s, x_true, rng);
    sg::SgTrace run;
    if (method == "sg") {
      run = sg::sg_run(problem, x0, cfg.r_max, sampler);
    } else if (method == "ssum_sg") {
      sg::SgModel model(problem);
      RunOptions opts;
      opts.r_max = cfg.r_max;
      run.iterates.push_back(x0);
      run.trace = run_ssum(model, sampler, x0, opts,
                           [&](int, const Eigen::VectorXd& x) { run.iterates.push_back(x); });
    } else if (method == "projected_ssum_sg") {
      run = sg::projected_ssum_sg(problem, x0, cfg.r_max, sampler);
    } else if (method == "l1_ssum_sg") {
      run = sg::l1_ssum_sg(problem, x0, cfg.r_max, sampler);
    } else if (method == "projected_sg") {
      run = sg::projected_sg_baseline(problem, x0, cfg.r_max, sampler, 1.0 / problem.lipschitz);
    } else {
      throw ConfigError("method '" + method + "' does not apply to the sg scenario");
    }
    Recorder rec(method, schedule);
    for (int r = 0; r < static_cast<int>(run.iterates.size()); ++r) {
      const Eigen::VectorXd& x = run.iterates[static_cast<std::size_t>(r)];
      rec.maybe_score(r, [&] {
        return score_values(eval_set.size(), [&](std::size_t j) {
          return problem.value(x, eval_set[j]) + problem.lambda * x.lpNorm<1>();
        });
      });
    }
    out[i] = rec.take();
  });
  return out;
}

std::string join(const std::vector<std::string>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + v[i];
  return s;
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << content;
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

}  // namespace

std::string_view scenario_name(Scenario s) {
  switch (s) {
    case Scenario::Wmmse: return "wmmse";
    case Scenario::Dictionary: return "dictionary";
    case Scenario::Sg: return "sg";
  }
  return "?";
}

const std::vector<std::string>& known_methods(Scenario s) {
  static const std::vector<std::string> w{"stochastic_wmmse", "one_sample_wmmse", "mean_wmmse",
                                          "sg"};
  static const std::vector<std::string> d{"ssum_dictionary"};
  static const std::vector<std::string> g{"sg", "ssum_sg", "projected_ssum_sg", "l1_ssum_sg",
                                          "projected_sg"};
  switch (s) {
    case Scenario::Wmmse: return w;
    case Scenario::Dictionary: return d;
    case Scenario::Sg: return g;
  }
  return w;
}

std::uint64_t method_seed(std::uint64_t master, const std::string& method) {
  const auto& all = method_catalog();
  auto it = std::find(all.begin(), all.end(), method);
  if (it == all.end()) throw ConfigError("unknown method '" + method + "'");
  return derive_seed(master, label(StreamLabel::MethodBase) +
                                 static_cast<std::uint64_t>(it - all.begin()));
}

ExperimentConfig ExperimentConfig::from(const ConfigFile& f) {
  ExperimentConfig c;
  c.name = f.get_string("name", c.name);
  c.scenario = parse_scenario(f.get_string("scenario", "wmmse"));
  c.methods = f.get_list("methods", known_methods(c.scenario));
  c.r_max = f.get_int("r_max", c.r_max);
  c.n_mc = f.get_int("n_mc", c.n_mc);
  c.eval_every = f.get_int("eval_every", c.eval_every);
  c.explicit_schedule = f.has("schedule");
  c.schedule = f.get_int_list("schedule", {});
  c.seed = f.get_u64("seed", c.seed);
  c.output_dir = f.get_string("output_dir", c.output_dir);
  c.threads = f.get_int("threads", c.threads);
  c.record_timing = f.get_bool("record_timing", c.record_timing);

  // Network (homogeneous cells and users).
  {
    int cells = f.get_int("cells", 7);
    int users = f.get_int("users_per_cell", 1);
    int tx = f.get_int("tx_antennas", 2);
    int rx = f.get_int("rx_antennas", 2);
    int streams = f.get_int("streams", 2);
    double power = f.get_double("power", 1.0);
    double noise = f.get_double("noise", 1.0);
    double rho = f.get_double("rho", -1.0);
    NetworkConfig net;
    net.cells = cells;
    net.users_per_cell.assign(static_cast<std::size_t>(std::max(0, cells)), users);
    net.tx_antennas.assign(static_cast<std::size_t>(std::max(0, cells)), tx);
    net.power.assign(static_cast<std::size_t>(std::max(0, cells)), power);
    const auto n_users = static_cast<std::size_t>(std::max(0, cells) * std::max(0, users));
    net.rx_antennas.assign(n_users, rx);
    net.streams.assign(n_users, streams);
    net.noise.assign(n_users, noise);
    net.rho = rho > 0.0 ? rho : (tx > 0 ? 0.01 * power / tx : 0.0);
    if (f.has("rho") && !(rho > 0.0)) throw ConfigError("'rho' must be positive");
    net.csi.snr_db = f.get_double("snr_db", net.csi.snr_db);
    net.csi.eta_db = f.get_double("eta_db", net.csi.eta_db);
    net.csi.gamma_csi = f.get_double("gamma_csi", net.csi.gamma_csi);
    net.pathloss.exponent = f.get_double("pathloss_exponent", net.pathloss.exponent);
    net.pathloss.min_distance = f.get_double("min_distance", net.pathloss.min_distance);
    net.pathloss.wrap_around = f.get_bool("wrap_around", net.pathloss.wrap_around);
    try {
      net.validate();
    } catch (const ConfigError&) {
      throw;
    } catch (const Error& e) {
      throw ConfigError(e.what());
    }
    c.wmmse.net = net;
    c.wmmse.mean_variant = parse_variant(f.get_string("mean_variant", "pathloss_magnitude"));
    c.wmmse.sg_step = f.get_double("sg_step", c.wmmse.sg_step);
    c.wmmse.sg_constant_step = f.get_bool("sg_constant_step", c.wmmse.sg_constant_step);
  }

  c.dict.dim = f.get_int("dict_dim", c.dict.dim);
  c.dict.atoms = f.get_int("dict_atoms", c.dict.atoms);
  c.dict.sparsity = f.get_int("dict_sparsity", c.dict.sparsity);
  c.dict.noise = f.get_double("dict_noise", c.dict.noise);
  c.dict.lambda = f.get_double("dict_lambda", c.dict.lambda);
  c.dict.gamma_prox = f.get_double("dict_gamma", c.dict.gamma_prox);
  c.dict.corpus_path = f.get_string("corpus_path", c.dict.corpus_path);
  c.dict.corpus_dim = f.get_int("corpus_dim", c.dict.corpus_dim);

  c.sg.problem = f.get_string("sg_problem", c.sg.problem);
  c.sg.dim = f.get_int("sg_dim", c.sg.dim);
  c.sg.lambda = f.get_double("sg_lambda", c.sg.lambda);
  c.sg.row_norm = f.get_double("sg_row_norm", c.sg.row_norm);
  c.sg.noise = f.get_double("sg_noise", c.sg.noise);
  c.sg.box = f.get_bool("sg_box", c.sg.box);
  c.sg.box_lo = f.get_double("sg_box_lo", c.sg.box_lo);
  c.sg.box_hi = f.get_double("sg_box_hi", c.sg.box_hi);

  PropertyParams& p = c.props;
  p.tightness_samples = f.get_int("check_tightness_samples", p.tightness_samples);
  p.tightness_tol = f.get_double("check_tightness_tol", p.tightness_tol);
  p.convexity_probes = f.get_int("check_convexity_probes", p.convexity_probes);
  p.convexity_tol = f.get_double("check_convexity_tol", p.convexity_tol);
  p.has_rho_override = f.has("check_rho");
  p.rho_override = f.get_double("check_rho", p.rho_override);
  p.lipschitz_scale = f.get_double("check_lipschitz_scale", p.lipschitz_scale);
  p.lemma_seeds = f.get_int("check_lemma_seeds", p.lemma_seeds);
  p.lemma_iterations = f.get_int("check_lemma_iterations", p.lemma_iterations);
  p.sg_iterations = f.get_int("check_sg_iterations", p.sg_iterations);
  p.dict_iterations = f.get_int("check_dict_iterations", p.dict_iterations);

  f.require_all_used();
  c.validate();
  return c;
}

ExperimentConfig ExperimentConfig::load(const std::string& path) {
  return from(ConfigFile::load(path));
}

ExperimentConfig ExperimentConfig::desk_wmmse() { return from(ConfigFile::parse("")); }

void ExperimentConfig::validate() const {
  require(r_max >= 1, "'r_max' must be >= 1");
  require(n_mc >= 1, "'n_mc' must be >= 1");
  require(eval_every >= 0, "'eval_every' must be >= 0");
  require(threads >= 1, "'threads' must be >= 1");
  require(!methods.empty(), "'methods' must not be empty");
  const auto& ok = known_methods(scenario);
  std::set<std::string> seen;
  for (const auto& m : methods) {
    require(std::find(ok.begin(), ok.end(), m) != ok.end(),
            "method '" + m + "' is not available in scenario '" +
                std::string(scenario_name(scenario)) + "'");
    require(seen.insert(m).second, "method '" + m + "' listed twice");
  }
  for (int r : schedule) require(r <= r_max, "schedule entry exceeds r_max");

  switch (scenario) {
    case Scenario::Wmmse: {
      NetworkConfig net = wmmse.net;
      try {
        net.validate();
      } catch (const ConfigError&) {
        throw;
      } catch (const Error& e) {
        throw ConfigError(e.what());
      }
      require(!std::isnan(net.csi.snr_db) && !std::isnan(net.csi.eta_db), "CSI parameters must be numbers");
      require(net.csi.gamma_csi >= 0.0, "'gamma_csi' must be >= 0");
      require(net.pathloss.exponent > 0.0, "'pathloss_exponent' must be positive");
      require(net.pathloss.min_distance > 0.0 && net.pathloss.min_distance < 0.5,
              "'min_distance' must lie in (0, 0.5)");
      break;
    }
    case Scenario::Dictionary:
      require(dict.dim >= 1 && dict.atoms >= 1, "dictionary dimensions must be positive");
      require(dict.sparsity >= 0 && dict.sparsity <= dict.atoms, "'dict_sparsity' out of range");
      require(dict.noise >= 0.0, "'dict_noise' must be >= 0");
      require(dict.lambda >= 0.0, "'dict_lambda' must be >= 0");
      require(dict.gamma_prox > 0.0, "'dict_gamma' must be positive");
      require(dict.corpus_path.empty() || dict.corpus_path.ends_with(".csv") || dict.corpus_dim >= 1,
              "binary corpora need 'corpus_dim'");
      break;
    case Scenario::Sg: {
      static const std::set<std::string> problems{"quadratic_mean", "least_squares", "logistic",
                                                  "cauchy"};
      require(problems.count(sg.problem) != 0, "unknown sg_problem '" + sg.problem + "'");
      require(sg.dim >= 1, "'sg_dim' must be >= 1");
      require(sg.lambda >= 0.0, "'sg_lambda' must be >= 0");
      require(sg.row_norm > 0.0, "'sg_row_norm' must be positive");
      require(sg.noise >= 0.0, "'sg_noise' must be >= 0");
      require(!sg.box || sg.box_lo <= sg.box_hi, "'sg_box_lo' must not exceed 'sg_box_hi'");
      for (const auto& m : methods) {
        if (m == "sg") require(sg.lambda == 0.0 && !sg.box, "method 'sg' needs sg_lambda = 0 and no box");
        if (m == "projected_ssum_sg" || m == "projected_sg") {
          require(sg.lambda == 0.0, "method '" + m + "' needs sg_lambda = 0");
        }
        if (m == "l1_ssum_sg") require(!sg.box, "method 'l1_ssum_sg' is unconstrained");
      }
      break;
    }
  }

  require(props.tightness_samples >= 1, "'check_tightness_samples' must be >= 1");
  require(props.convexity_probes >= 1, "'check_convexity_probes' must be >= 1");
  require(props.tightness_tol > 0.0 && props.convexity_tol > 0.0, "check tolerances must be positive");
  require(props.lipschitz_scale > 0.0, "'check_lipschitz_scale' must be positive");
  require(props.lemma_seeds >= 1, "'check_lemma_seeds' must be >= 1");
  require(props.lemma_iterations > 100, "'check_lemma_iterations' must exceed 100");
  require(props.sg_iterations >= 1 && props.dict_iterations >= 1, "check iteration counts must be >= 1");
}

std::vector<int> ExperimentConfig::scored_iterations() const {
  std::set<int> s;
  if (explicit_schedule) {
    s.insert(schedule.begin(), schedule.end());
  } else if (eval_every > 0) {
    for (int r = 0; r <= r_max; r += eval_every) s.insert(r);
    s.insert(r_max);
  }
  return {s.begin(), s.end()};
}

std::string ExperimentConfig::canonical() const {
  std::ostringstream o;
  auto d = [](double v) { return format_double(v); };
  auto ints = [](const std::vector<int>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
    return s;
  };
  const NetworkConfig& n = wmmse.net;
  o << "name=" << name << "\n"
    << "scenario=" << scenario_name(scenario) << "\n"
    << "methods=" << join(methods) << "\n"
    << "r_max=" << r_max << "\n"
    << "n_mc=" << n_mc << "\n"
    << "eval_every=" << eval_every << "\n"
    << "schedule=" << (explicit_schedule ? ints(schedule) : "-") << "\n"
    << "seed=" << seed << "\n"
    << "record_timing=" << record_timing << "\n"
    << "cells=" << n.cells << "\n"
    << "users_per_cell=" << ints(n.users_per_cell) << "\n"
    << "tx_antennas=" << ints(n.tx_antennas) << "\n"
    << "rx_antennas=" << ints(n.rx_antennas) << "\n"
    << "streams=" << ints(n.streams) << "\n";
  o << "power=";
  for (double p : n.power) o << d(p) << ",";
  o << "\nnoise=";
  for (double p : n.noise) o << d(p) << ",";
  o << "\nrho=" << d(n.rho) << "\n"
    << "snr_db=" << d(n.csi.snr_db) << "\n"
    << "eta_db=" << d(n.csi.eta_db) << "\n"
    << "gamma_csi=" << d(n.csi.gamma_csi) << "\n"
    << "pathloss_exponent=" << d(n.pathloss.exponent) << "\n"
    << "min_distance=" << d(n.pathloss.min_distance) << "\n"
    << "wrap_around=" << n.pathloss.wrap_around << "\n"
    << "mean_variant=" << variant_name(wmmse.mean_variant) << "\n"
    << "sg_step=" << d(wmmse.sg_step) << "\n"
    << "sg_constant_step=" << wmmse.sg_constant_step << "\n"
    << "dict_dim=" << dict.dim << "\n"
    << "dict_atoms=" << dict.atoms << "\n"
    << "dict_sparsity=" << dict.sparsity << "\n"
    << "dict_noise=" << d(dict.noise) << "\n"
    << "dict_lambda=" << d(dict.lambda) << "\n"
    << "dict_gamma=" << d(dict.gamma_prox) << "\n"
    << "corpus_path=" << dict.corpus_path << "\n"
    << "corpus_dim=" << dict.corpus_dim << "\n"
    << "sg_problem=" << sg.problem << "\n"
    << "sg_dim=" << sg.dim << "\n"
    << "sg_lambda=" << d(sg.lambda) << "\n"
    << "sg_row_norm=" << d(sg.row_norm) << "\n"
    << "sg_noise=" << d(sg.noise) << "\n"
    << "sg_box=" << sg.box << "\n"
    << "sg_box_lo=" << d(sg.box_lo) << "\n"
    << "sg_box_hi=" << d(sg.box_hi) << "\n"
    << "check_tightness_samples=" << props.tightness_samples << "\n"
    << "check_tightness_tol=" << d(props.tightness_tol) << "\n"
    << "check_convexity_probes=" << props.convexity_probes << "\n"
    << "check_convexity_tol=" << d(props.convexity_tol) << "\n"
    << "check_rho=" << (props.has_rho_override ? d(props.rho_override) : "-") << "\n"
    << "check_lipschitz_scale=" << d(props.lipschitz_scale) << "\n"
    << "check_lemma_seeds=" << props.lemma_seeds << "\n"
    << "check_lemma_iterations=" << props.lemma_iterations << "\n"
    << "check_sg_iterations=" << props.sg_iterations << "\n"
    << "check_dict_iterations=" << props.dict_iterations << "\n";
  return o.str();
}

std::string ExperimentConfig::hash() const { return sha256_hex(canonical()); }

std::vector<ResultRow> ResultTable::method_rows(const std::string& method) const {
  std::vector<ResultRow> out;
  for (const auto& r : rows) {
    if (r.method == method) out.push_back(r);
  }
  return out;
}

double ResultTable::final_value(const std::string& method) const {
  auto rs = method_rows(method);
  if (rs.empty()) throw Error("no results for method '" + method + "'");
  return rs.back().value;
}

ResultTable run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  std::vector<int> schedule = cfg.scored_iterations();
  ResultTable table;
  table.config_hash = cfg.hash();
  if (schedule.empty()) return table;

  std::vector<std::vector<ResultRow>> per_method;
  switch (cfg.scenario) {
    case Scenario::Wmmse: per_method = run_wmmse(cfg, schedule); break;
    case Scenario::Dictionary: per_method = run_dictionary(cfg, schedule); break;
    case Scenario::Sg: per_method = run_sg(cfg, schedule); break;
  }
  for (auto& rows : per_method) {
    for (auto& r : rows) table.rows.push_back(std::move(r));
  }
  return table;
}

std::vector<std::filesystem::path> emit_plot_data(const ResultTable& table,
                                                  const ExperimentConfig& cfg,
                                                  const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory '" + dir.string() + "': " + ec.message());

  std::vector<std::filesystem::path> files;
  if (!table.rows.empty()) {
    std::ostringstream all;
    all << "method,iteration,value,stderr\n";
    for (const auto& r : table.rows) {
      all << r.method << "," << r.iteration << "," << format_double(r.value) << ","
          << format_double(r.stderr_value) << "\n";
    }
    write_file(dir / "results.csv", all.str());
    files.push_back(dir / "results.csv");

    for (const auto& m : cfg.methods) {
      auto rows = table.method_rows(m);
      if (rows.empty()) continue;
      std::ostringstream o;
      o << "iteration,value,stderr\n";
      for (const auto& r : rows) {
        o << r.iteration << "," << format_double(r.value) << "," << format_double(r.stderr_value)
          << "\n";
      }
      auto path = dir / (m + ".csv");
      write_file(path, o.str());
      files.push_back(path);
    }
  }

  std::ostringstream man;
  man << "config_hash " << table.config_hash << "\n";
  man << "files " << files.size() << "\n";
  for (const auto& p : files) man << sha256_file(p) << "  " << p.filename().string() << "\n";
  write_file(dir / "manifest.txt", man.str());

  if (cfg.record_timing && !table.rows.empty()) {
    std::ostringstream t;
    t << "method,iteration,wall_seconds\n";
    for (const auto& r : table.rows) {
      t << r.method << "," << r.iteration << "," << format_double(r.wall_seconds) << "\n";
    }
    write_file(dir / "timing.csv", t.str());
  }
  return files;
}

std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw Error("sha256 failed");
  }
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[digest[i] >> 4];
    out += hex[digest[i] & 0xf];
  }
  return out;
}

std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return sha256_hex(ss.str());
}

}  // namespace ssum::exp
