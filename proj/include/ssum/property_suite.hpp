#pragma once

// Runtime invariant sweeps: surrogate tightness and upper-bound checks,
// strong-convexity probes, SG equivalence, surrogate-gap decay, step-norm
// decay, power feasibility and the dictionary-learning sanity run.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ssum/channel_model.hpp"
#include "ssum/experiment.hpp"
#include "ssum/trace.hpp"

namespace ssum::props {

struct CheckResult {
  std::string name;
  bool passed = false;
  double measured = 0.0;
  double threshold = 0.0;
  std::string detail;
};

struct PropertyReport {
  std::vector<CheckResult> checks;
  bool all_passed() const;
  std::string text() const;
};

struct TightnessSweep {
  int samples = 0;
  int a1_failures = 0;
  int a2_failures = 0;
  /// max |ghat(y,y) - g(y)| / (1 + |g(y)|)
  double max_a1_rel = 0.0;
  /// min (ghat(x,y) - g(x)) / (1 + |g(x)|)
  double min_a2_rel = 0.0;
  bool ok() const { return a1_failures == 0 && a2_failures == 0; }
};

/// Random (x, y, H) triples on a drawn channel model. Half of the x are
/// independent random precoders, half are small perturbations of y.
/// `rho` replaces the network's proximal weight in the surrogate.
TightnessSweep wmmse_tightness(const wmmse::NetworkConfig& net, int samples, double tol,
                               std::uint64_t seed, std::optional<double> rho = std::nullopt);
TightnessSweep dictionary_tightness(const exp::DictionaryScenario& s, int samples, double tol,
                                    std::uint64_t seed);
/// Least-squares SG surrogate with the Lipschitz constant multiplied by
/// `lipschitz_scale` (< 1 underestimates it).
TightnessSweep sg_tightness(int samples, double tol, std::uint64_t seed,
                            double lipschitz_scale = 1.0);

/// Minimum over probes of the strong-convexity margin with modulus rho
/// (WMMSE) or gamma_prox (dictionary). Nonnegative up to round-off when
/// the modulus holds.
double wmmse_convexity(const wmmse::NetworkConfig& net, int probes, std::uint64_t seed);
double dictionary_convexity(const exp::DictionaryScenario& s, int probes, std::uint64_t seed);

struct SgEquivalence {
  /// Max per-coordinate difference between the SSUM iterates and the
  /// 1/(rL) recursion over least-squares, logistic and Cauchy problems.
  double max_diff = 0.0;
  /// Max difference between SSUM iterates and the running sample mean on
  /// g1 = 0.5 ||x - xi||^2.
  double mean_diff = 0.0;
  /// Max difference between the l1 recursion and the SSUM aggregate
  /// minimizer with g2 = lambda ||x||_1.
  double l1_diff = 0.0;
};
SgEquivalence sg_equivalence(int iterations, std::uint64_t seed);

struct LemmaStudy {
  std::vector<std::vector<TraceRecord>> traces;  // one per seed, every iteration
  double min_gap = 0.0;
  std::vector<double> gap_ratios;  // gap(r_late) / gap(r_early) per seed
  double median_ratio = 0.0;
  std::vector<StepNormReport> step_reports;
  /// max over seeds of tail_max / constant
  double worst_step_ratio = 0.0;
  /// max over iterates and cells of power / P
  double max_power_ratio = 0.0;
  /// max over iterates and cells of mu * |power - P| / P
  double max_slackness = 0.0;
  /// descent violations fhat(x^r) - fhat(x^{r-1}) > tol
  int descent_violations = 0;
};

/// Stochastic WMMSE runs with gap tracking on `seeds` independently drawn
/// channel models. Gap ratio uses iterations 10 and `iterations`.
LemmaStudy wmmse_lemma_study(const wmmse::NetworkConfig& net, int seeds, int iterations,
                             std::uint64_t master_seed);

struct DictionaryStudy {
  double initial_loss = 0.0;
  double final_loss = 0.0;
  double max_kkt = 0.0;
  double max_column_norm = 0.0;
};
DictionaryStudy dictionary_study(const exp::DictionaryScenario& s, int iterations, int n_eval,
                                 std::uint64_t seed);

/// All checks with the parameters in cfg.props and the network in
/// cfg.wmmse.net.
PropertyReport property_suite(const exp::ExperimentConfig& cfg);

}  // namespace ssum::props
