#pragma once

// Batch experiments: configuration schema, the compared methods, Monte-Carlo
// scoring on a shared evaluation set, and deterministic CSV output.

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "ssum/channel_model.hpp"
#include "ssum/config.hpp"
#include "ssum/wmmse.hpp"

namespace ssum::exp {

enum class Scenario { Wmmse, Dictionary, Sg };

struct WmmseScenario {
  wmmse::NetworkConfig net;
  wmmse::MeanVariant mean_variant = wmmse::MeanVariant::PathLossMagnitude;
  /// Initial SG step; <= 0 picks one from the first gradient.
  double sg_step = 0.0;
  /// Constant instead of step/r. Known to diverge; for demonstration only.
  bool sg_constant_step = false;
};

struct DictionaryScenario {
  int dim = 8;
  int atoms = 10;
  int sparsity = 3;
  double noise = 0.01;
  double lambda = 0.05;
  double gamma_prox = 0.01;
  /// Optional corpus (.csv, one signal per row, or raw float64 with corpus_dim).
  std::string corpus_path;
  int corpus_dim = 0;
};

struct SgScenario {
  std::string problem = "least_squares";  // quadratic_mean | least_squares | logistic | cauchy
  int dim = 5;
  double lambda = 0.0;
  double row_norm = 1.0;
  double noise = 0.1;
  bool box = false;
  double box_lo = -1.0;
  double box_hi = 1.0;
};

/// Parameters of the `check` command.
struct PropertyParams {
  int tightness_samples = 1000;
  double tightness_tol = 1e-7;
  int convexity_probes = 200;
  double convexity_tol = 1e-8;
  /// When set, the WMMSE surrogate uses this proximal weight (a negative value
  /// injects an upper-bound violation).
  double rho_override = 0.0;
  bool has_rho_override = false;
  /// Multiplies the SG Lipschitz constant used by the surrogate.
  double lipschitz_scale = 1.0;
  int lemma_seeds = 5;
  int lemma_iterations = 500;
  int sg_iterations = 1000;
  int dict_iterations = 2000;
};

struct ExperimentConfig {
  std::string name = "experiment";
  Scenario scenario = Scenario::Wmmse;
  std::vector<std::string> methods;
  int r_max = 300;
  int n_mc = 200;
  int eval_every = 10;
  /// Explicit scored iterations; overrides eval_every when present.
  std::vector<int> schedule;
  bool explicit_schedule = false;
  std::uint64_t seed = 1;
  std::string output_dir = "out";
  int threads = 1;
  bool record_timing = false;

  WmmseScenario wmmse;
  DictionaryScenario dict;
  SgScenario sg;
  PropertyParams props;

  /// Reads every recognized key; unknown keys and invalid values throw
  /// ConfigError.
  static ExperimentConfig from(const ConfigFile& file);
  static ExperimentConfig load(const std::string& path);
  /// Desk-scale WMMSE comparison (K=7, M=N=2, L=1, 15 dB, eta=6).
  static ExperimentConfig desk_wmmse();

  void validate() const;
  /// Scored iterations in increasing order (0 means the initial point).
  std::vector<int> scored_iterations() const;
  /// Text listing every field that affects results, in a fixed order.
  /// The output directory and thread count are excluded.
  std::string canonical() const;
  std::string hash() const;
};

std::string_view scenario_name(Scenario s);
/// Methods accepted by a scenario.
const std::vector<std::string>& known_methods(Scenario s);

struct ResultRow {
  std::string method;
  int iteration = 0;
  double value = 0.0;
  double stderr_value = 0.0;
  double wall_seconds = 0.0;
};

struct ResultTable {
  std::vector<ResultRow> rows;
  std::string config_hash;
  /// Rows of one method, in iteration order.
  std::vector<ResultRow> method_rows(const std::string& method) const;
  /// Value at the last scored iteration of a method.
  double final_value(const std::string& method) const;
};

/// Runs every configured method with its own derived seed and scores the
/// scheduled iterates on one shared evaluation set. WMMSE scores are ergodic
/// sum rates (higher is better); dictionary and SG scores are mean losses.
ResultTable run_experiment(const ExperimentConfig& cfg);

/// Writes results.csv, one <method>.csv per method (iteration,value,stderr)
/// and manifest.txt. With an empty table only the manifest is written.
/// timing.csv is added when cfg.record_timing is set; it is not listed in
/// the manifest since wall times vary between runs. Returns the data files.
std::vector<std::filesystem::path> emit_plot_data(const ResultTable& table,
                                                  const ExperimentConfig& cfg,
                                                  const std::filesystem::path& dir);

std::string sha256_hex(std::string_view data);
std::string sha256_file(const std::filesystem::path& path);

/// Seeds are derived from the master seed with fixed labels so that adding
/// or reordering methods does not change any other stream.
enum class StreamLabel : std::uint64_t {
  Layout = 1,
  Evaluation = 2,
  Init = 3,
  Problem = 4,
  MethodBase = 100,
};
std::uint64_t method_seed(std::uint64_t master, const std::string& method);

}  // namespace ssum::exp
