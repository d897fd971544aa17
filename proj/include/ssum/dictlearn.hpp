#pragma once

// Online sparse dictionary learning as an SSUM instance.
//
// Loss g(D, y) = min_a 0.5 ||y - D a||^2 + lambda ||a||_1. For an anchor Dbar
// the surrogate is h(abar, D, y) + (gamma/2) ||D - Dbar||_F^2 with abar the
// lasso solution at Dbar, so the aggregate is a quadratic in D described by
// A_s = sum abar abar^T, B_s = sum y abar^T and C = sum Dbar.

#include <Eigen/Dense>
#include <functional>
#include <string>
#include <vector>

#include "ssum/rng.hpp"
#include "ssum/ssum.hpp"

namespace ssum::dict {

using Eigen::MatrixXd;
using Eigen::VectorXd;

struct LassoOptions {
  double tol = 1e-10;
  int max_sweeps = 100000;
};

/// Cyclic coordinate descent for min_a 0.5 ||y - D a||^2 + lambda ||a||_1.
/// Stops when the KKT residual is <= tol. Throws NonFinite on NaN input.
VectorXd lasso(const MatrixXd& d, const VectorXd& y, double lambda, const LassoOptions& opts = {});

/// Max over coordinates of the violation of the soft-threshold optimality
/// conditions.
double lasso_kkt_residual(const MatrixXd& d, const VectorXd& y, const VectorXd& alpha,
                          double lambda);

/// h(a, D, y)
double lasso_objective(const MatrixXd& d, const VectorXd& y, const VectorXd& alpha,
                       double lambda);

/// g(D, y) = min_a h(a, D, y)
double fitting_loss(const MatrixXd& d, const VectorXd& y, double lambda);

/// Columnwise projection onto the unit ball.
MatrixXd project_columns(const MatrixXd& d);

struct DictionaryState {
  MatrixXd d;
  MatrixXd a_s;     // k x k
  MatrixXd b_s;     // n x k
  MatrixXd c_prox;  // n x k
  int r = 0;
  double lambda = 0.0;
  double gamma_prox = 0.0;

  static DictionaryState init(const MatrixXd& d0, double lambda, double gamma_prox);
};

/// Codes y against the current dictionary and folds the surrogate into the
/// statistics. Returns the code.
VectorXd observe_signal(DictionaryState& state, const VectorXd& y,
                        const LassoOptions& opts = {});

struct DictUpdateOptions {
  double tol = 1e-10;
  int max_sweeps = 20000;
};

/// Minimizer over unit-norm-bounded columns of
///   0.5 Tr(D^T D (A_s + gamma r I)) - Tr(D^T (B_s + gamma C)),
/// by block coordinate descent over columns started at state.d. Columns with
/// zero curvature (unused atoms when gamma = 0) are kept.
MatrixXd dict_update(const DictionaryState& state, const DictUpdateOptions& opts = {});

/// Projected-gradient residual ||D - P(D - grad)||_F of the averaged aggregate at d.
double dict_update_residual(const DictionaryState& state, const MatrixXd& d);

class DictionaryModel {
 public:
  using Point = MatrixXd;
  using Sample = VectorXd;

  DictionaryModel(const MatrixXd& d0, double lambda, double gamma_prox,
                  LassoOptions lasso_opts = {});

  double eval_g1(const Point& d, const Sample& y) const;
  double eval_g2(const Point&, const Sample&) const { return 0.0; }
  double eval_ghat1(const Point& d, const Point& dbar, const Sample& y) const;
  void observe(const Point& dbar, const Sample& y);
  Point minimize_aggregate();
  Point project(const Point& d) const { return project_columns(d); }
  double distance(const Point& a, const Point& b) const { return (a - b).norm(); }
  VectorXd to_vector(const Point& d) const { return d.reshaped(); }
  Point from_vector(const VectorXd& v, const Point& like) const {
    return v.reshaped(like.rows(), like.cols());
  }

  const DictionaryState& state() const { return state_; }
  /// Every lasso code computed by observe(), for KKT auditing.
  double max_kkt_residual() const { return max_kkt_; }

 private:
  DictionaryState state_;
  LassoOptions lasso_opts_;
  double max_kkt_ = 0.0;
};

static_assert(FlattenableModel<DictionaryModel>);

/// Bounded signal distribution.
class SignalSource {
 public:
  virtual ~SignalSource() = default;
  virtual VectorXd sample(RngStream& rng) const = 0;
  virtual int dimension() const = 0;
};

/// y = D* a* + noise with `sparsity` nonzeros in a*, magnitudes uniform in
/// [0.5, 1] with random signs, and Gaussian noise clipped at 4 standard
/// deviations so that signals stay in a bounded set.
class PlantedSource : public SignalSource {
 public:
  PlantedSource(MatrixXd atoms, int sparsity, double noise_std);
  static PlantedSource random(int n, int k, int sparsity, double noise_std, RngStream& rng);

  VectorXd sample(RngStream& rng) const override;
  int dimension() const override { return static_cast<int>(atoms_.rows()); }
  const MatrixXd& atoms() const { return atoms_; }

 private:
  MatrixXd atoms_;
  int sparsity_;
  double noise_std_;
};

/// Uniform draws from a finite corpus (rows = signals).
class CorpusSource : public SignalSource {
 public:
  explicit CorpusSource(MatrixXd rows);
  VectorXd sample(RngStream& rng) const override;
  int dimension() const override { return static_cast<int>(rows_.cols()); }
  const MatrixXd& rows() const { return rows_; }

 private:
  MatrixXd rows_;
};

/// Random dictionary with unit-norm Gaussian columns.
MatrixXd random_dictionary(int n, int k, RngStream& rng);

/// Average fitting loss over the given signals.
double mean_fitting_loss(const MatrixXd& d, const std::vector<VectorXd>& signals, double lambda);

RunTrace<MatrixXd> online_dictionary_learning(
    const SignalSource& source, const MatrixXd& d0, double lambda, double gamma_prox,
    RngStream& rng, const RunOptions& opts,
    const std::function<void(int, const MatrixXd&)>& on_iterate = {},
    DictionaryModel* model_out = nullptr);

/// Corpus as CSV (one signal per row) or as raw little-endian float64 with
/// `dimension` values per signal.
MatrixXd load_matrix_csv(const std::string& path);
MatrixXd load_corpus_binary(const std::string& path, int dimension);
void save_matrix_csv(const MatrixXd& m, const std::string& path);

}  // namespace ssum::dict
