#include "ssum/dictlearn.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "ssum/numeric.hpp"

namespace ssum::dict {

namespace {

double soft(double z, double tau) {
  if (z > tau) return z - tau;
  if (z < -tau) return z + tau;
  return 0.0;
}

double kkt_from_gradient(const VectorXd& grad, const VectorXd& alpha, double lambda) {
  double worst = 0.0;
  for (Eigen::Index j = 0; j < alpha.size(); ++j) {
    double v = alpha(j) != 0.0 ? std::abs(grad(j) + lambda * (alpha(j) > 0 ? 1.0 : -1.0))
                               : std::max(0.0, std::abs(grad(j)) - lambda);
    worst = std::max(worst, v);
  }
  return worst;
}

}  // namespace

VectorXd lasso(const MatrixXd& d, const VectorXd& y, double lambda, const LassoOptions& opts) {
  if (!d.allFinite() || !y.allFinite() || !std::isfinite(lambda)) {
    throw NonFinite("lasso: non-finite input");
  }
  if (d.rows() != y.size()) throw DimensionMismatch("lasso: D rows must match y");
  if (lambda < 0.0) throw Error("lasso: lambda must be >= 0");
  const Eigen::Index k = d.cols();
  MatrixXd gram = d.transpose() * d;
  VectorXd corr = d.transpose() * y;
  VectorXd alpha = VectorXd::Zero(k);
  VectorXd g = VectorXd::Zero(k);  // gram * alpha

  for (int sweep = 0; sweep < opts.max_sweeps; ++sweep) {
    for (Eigen::Index j = 0; j < k; ++j) {
      const double gjj = gram(j, j);
      if (gjj <= 0.0) continue;
      const double rho = corr(j) - (g(j) - gjj * alpha(j));
      const double next = soft(rho, lambda) / gjj;
      const double delta = next - alpha(j);
      if (delta != 0.0) {
        g.noalias() += delta * gram.col(j);
        alpha(j) = next;
      }
    }
    g.noalias() = gram * alpha;
    if (kkt_from_gradient(g - corr, alpha, lambda) <= opts.tol) break;
  }
  return alpha;
}

double lasso_kkt_residual(const MatrixXd& d, const VectorXd& y, const VectorXd& alpha,
                          double lambda) {
  VectorXd grad = d.transpose() * (d * alpha - y);
  return kkt_from_gradient(grad, alpha, lambda);
}

double lasso_objective(const MatrixXd& d, const VectorXd& y, const VectorXd& alpha,
                       double lambda) {
  return 0.5 * (y - d * alpha).squaredNorm() + lambda * alpha.lpNorm<1>();
}

double fitting_loss(const MatrixXd& d, const VectorXd& y, double lambda) {
  return lasso_objective(d, y, lasso(d, y, lambda), lambda);
}

MatrixXd project_columns(const MatrixXd& d) {
  MatrixXd out = d;
  for (Eigen::Index j = 0; j < out.cols(); ++j) {
    double nrm = out.col(j).norm();
    if (nrm > 1.0) out.col(j) /= nrm;
  }
  return out;
}

DictionaryState DictionaryState::init(const MatrixXd& d0, double lambda, double gamma_prox) {
  if (lambda < 0.0 || gamma_prox < 0.0) throw Error("dictionary: lambda and gamma must be >= 0");
  DictionaryState s;
  s.d = d0;
  s.a_s = MatrixXd::Zero(d0.cols(), d0.cols());
  s.b_s = MatrixXd::Zero(d0.rows(), d0.cols());
  s.c_prox = MatrixXd::Zero(d0.rows(), d0.cols());
  s.lambda = lambda;
  s.gamma_prox = gamma_prox;
  return s;
}

VectorXd observe_signal(DictionaryState& state, const VectorXd& y, const LassoOptions& opts) {
  VectorXd alpha = lasso(state.d, y, state.lambda, opts);
  state.a_s.noalias() += alpha * alpha.transpose();
  state.b_s.noalias() += y * alpha.transpose();
  state.c_prox += state.d;
  state.r += 1;
  return alpha;
}

MatrixXd dict_update(const DictionaryState& state, const DictUpdateOptions& opts) {
  if (state.r < 1) throw DegenerateStats("dict_update: no observations");
  MatrixXd curv = state.a_s;
  curv.diagonal().array() += state.gamma_prox * state.r;
  MatrixXd lin = state.b_s + state.gamma_prox * state.c_prox;
  if (!curv.allFinite() || !lin.allFinite()) throw DegenerateStats("dict_update: non-finite stats");

  MatrixXd d = project_columns(state.d);
  for (int sweep = 0; sweep < opts.max_sweeps; ++sweep) {
    double max_change = 0.0;
    for (Eigen::Index j = 0; j < d.cols(); ++j) {
      const double cjj = curv(j, j);
      if (cjj <= 0.0) continue;
      VectorXd u = d.col(j) + (lin.col(j) - d * curv.col(j)) / cjj;
      double nrm = u.norm();
      if (nrm > 1.0) u /= nrm;
      max_change = std::max(max_change, (u - d.col(j)).norm());
      d.col(j) = u;
    }
    if (max_change < opts.tol) break;
  }
  return d;
}

double dict_update_residual(const DictionaryState& state, const MatrixXd& d) {
  MatrixXd curv = state.a_s;
  curv.diagonal().array() += state.gamma_prox * state.r;
  MatrixXd grad = (d * curv - state.b_s - state.gamma_prox * state.c_prox) / state.r;
  MatrixXd stepped = d - grad;
  // Columns that carry no curvature are free; the prox gradient is taken on the
  // rest only.
  for (Eigen::Index j = 0; j < d.cols(); ++j) {
    if (curv(j, j) <= 0.0) stepped.col(j) = d.col(j);
  }
  return (d - project_columns(stepped)).norm();
}

DictionaryModel::DictionaryModel(const MatrixXd& d0, double lambda, double gamma_prox,
                                 LassoOptions lasso_opts)
    : state_(DictionaryState::init(d0, lambda, gamma_prox)), lasso_opts_(lasso_opts) {}

double DictionaryModel::eval_g1(const Point& d, const Sample& y) const {
  return lasso_objective(d, y, lasso(d, y, state_.lambda, lasso_opts_), state_.lambda);
}

double DictionaryModel::eval_ghat1(const Point& d, const Point& dbar, const Sample& y) const {
  VectorXd abar = lasso(dbar, y, state_.lambda, lasso_opts_);
  return lasso_objective(d, y, abar, state_.lambda) +
         0.5 * state_.gamma_prox * (d - dbar).squaredNorm();
}

void DictionaryModel::observe(const Point& dbar, const Sample& y) {
  state_.d = dbar;
  VectorXd alpha = observe_signal(state_, y, lasso_opts_);
  max_kkt_ = std::max(max_kkt_, lasso_kkt_residual(dbar, y, alpha, state_.lambda));
}

DictionaryModel::Point DictionaryModel::minimize_aggregate() {
  state_.d = dict_update(state_);
  return state_.d;
}

PlantedSource::PlantedSource(MatrixXd atoms, int sparsity, double noise_std)
    : atoms_(std::move(atoms)), sparsity_(sparsity), noise_std_(noise_std) {
  if (sparsity_ < 0 || sparsity_ > atoms_.cols()) throw Error("planted source: bad sparsity");
}

PlantedSource PlantedSource::random(int n, int k, int sparsity, double noise_std,
                                    RngStream& rng) {
  return PlantedSource(random_dictionary(n, k, rng), sparsity, noise_std);
}

VectorXd PlantedSource::sample(RngStream& rng) const {
  const auto k = static_cast<std::uint64_t>(atoms_.cols());
  std::vector<std::uint64_t> idx(k);
  for (std::uint64_t i = 0; i < k; ++i) idx[i] = i;
  VectorXd coef = VectorXd::Zero(atoms_.cols());
  for (int s = 0; s < sparsity_; ++s) {
    // partial Fisher-Yates
    std::uint64_t pick = s + rng.below(k - static_cast<std::uint64_t>(s));
    std::swap(idx[static_cast<std::size_t>(s)], idx[pick]);
    double mag = rng.uniform(0.5, 1.0);
    double sign = rng.uniform() < 0.5 ? -1.0 : 1.0;
    coef(static_cast<Eigen::Index>(idx[static_cast<std::size_t>(s)])) = sign * mag;
  }
  VectorXd y = atoms_ * coef;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    y(i) += std::clamp(rng.normal(), -4.0, 4.0) * noise_std_;
  }
  return y;
}

CorpusSource::CorpusSource(MatrixXd rows) : rows_(std::move(rows)) {
  if (rows_.rows() == 0) throw Error("corpus source: empty corpus");
  if (!rows_.allFinite()) throw NonFinite("corpus source: non-finite entries");
}

VectorXd CorpusSource::sample(RngStream& rng) const {
  auto i = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(rows_.rows())));
  return rows_.row(i).transpose();
}

MatrixXd random_dictionary(int n, int k, RngStream& rng) {
  MatrixXd d = rng.normal_matrix(n, k);
  for (Eigen::Index j = 0; j < d.cols(); ++j) d.col(j).normalize();
  return d;
}

double mean_fitting_loss(const MatrixXd& d, const std::vector<VectorXd>& signals, double lambda) {
  std::vector<double> vals;
  vals.reserve(signals.size());
  for (const auto& y : signals) vals.push_back(fitting_loss(d, y, lambda));
  return pairwise_mean(vals);
}

RunTrace<MatrixXd> online_dictionary_learning(
    const SignalSource& source, const MatrixXd& d0, double lambda, double gamma_prox,
    RngStream& rng, const RunOptions& opts,
    const std::function<void(int, const MatrixXd&)>& on_iterate, DictionaryModel* model_out) {
  if (d0.rows() != source.dimension()) {
    throw DimensionMismatch("online_dictionary_learning: D0 rows must match signal dimension");
  }
  DictionaryModel model(d0, lambda, gamma_prox);
  auto trace = run_ssum(model, [&] { return source.sample(rng); }, d0, opts, on_iterate);
  if (model_out) *model_out = std::move(model);
  return trace;
}

MatrixXd load_matrix_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        std::size_t used = 0;
        row.push_back(std::stod(cell, &used));
      } catch (const std::exception&) {
        throw IoError(path + ": not a number: '" + cell + "'");
      }
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw IoError(path + ": ragged rows");
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) return MatrixXd();
  MatrixXd m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows[0].size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  return m;
}

MatrixXd load_corpus_binary(const std::string& path, int dimension) {
  if (dimension < 1) throw IoError("binary corpus: dimension must be positive");
  std::ifstream in(path, std::ios::binary | std::ios::ate);
  if (!in) throw IoError("cannot open " + path);
  auto bytes = static_cast<std::size_t>(in.tellg());
  const std::size_t per_row = sizeof(double) * static_cast<std::size_t>(dimension);
  if (bytes % per_row != 0) throw IoError(path + ": size is not a multiple of the row length");
  in.seekg(0);
  std::vector<double> buf(bytes / sizeof(double));
  in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(bytes));
  Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> view(
      buf.data(), static_cast<Eigen::Index>(bytes / per_row), dimension);
  return view;
}

void save_matrix_csv(const MatrixXd& m, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) out << ',';
      out << format_double(m(i, j));
    }
    out << '\n';
  }
}

}  // namespace ssum::dict
