#pragma once

// Expected sum-rate maximization in a K-cell MIMO interfering broadcast
// channel, solved by SSUM with the weighted-MSE surrogate.
//
// Users are indexed by a flat id u; cell_of(u) is the serving base station.
// Precoders V_u are M_{cell(u)} x d_u, receivers U_u are N_u x d_u, and the
// channel from transmitter j to user u is N_u x M_j.

#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <vector>

#include "ssum/hermitian.hpp"
#include "ssum/rng.hpp"
#include "ssum/ssum.hpp"

namespace ssum::wmmse {

struct CsiParams {
  /// Interfering links within eta dB of the direct link are estimated.
  double eta_db = 6.0;
  /// Effective SNR coefficient of the estimator (dimensionless, linear).
  double gamma_csi = 1.0;
  double snr_db = 15.0;
};

struct PathLossParams {
  double exponent = 3.76;
  /// Minimum user-to-site distance, as a fraction of the inter-site distance.
  double min_distance = 0.05;
  bool wrap_around = true;
};

struct NetworkConfig {
  int cells = 0;
  std::vector<int> users_per_cell;  // L_k
  std::vector<int> tx_antennas;     // M_k
  std::vector<double> power;        // P_k (linear)
  std::vector<int> rx_antennas;     // N_u, per flat user
  std::vector<int> streams;         // d_u
  std::vector<double> noise;        // sigma_u^2
  double rho = 0.0;
  CsiParams csi;
  PathLossParams pathloss;

  /// Homogeneous network; rho <= 0 selects 0.01 * P / M.
  static NetworkConfig uniform(int cells, int users_per_cell, int tx_antennas, int rx_antennas,
                               int streams, double power, double noise, double rho = -1.0);

  int num_users() const { return static_cast<int>(rx_antennas.size()); }
  int cell_of(int user) const { return user_cell_.at(static_cast<std::size_t>(user)); }
  int first_user(int cell) const { return cell_first_.at(static_cast<std::size_t>(cell)); }
  int tx_of_user(int user) const { return tx_antennas[static_cast<std::size_t>(cell_of(user))]; }

  /// Checks the invariants and rebuilds the user/cell index. Throws
  /// ConfigError.
  void validate();

 private:
  std::vector<int> user_cell_;
  std::vector<int> cell_first_;
};

/// One draw of all channel matrices.
class ChannelRealization {
 public:
  ChannelRealization() = default;
  ChannelRealization(int users, int cells) : users_(users), cells_(cells), links_(users * cells) {}
  /// All links zero with dimensions taken from the network.
  static ChannelRealization zeros(const NetworkConfig& cfg);

  const CMatrix& operator()(int user, int tx) const { return links_[idx(user, tx)]; }
  CMatrix& operator()(int user, int tx) { return links_[idx(user, tx)]; }
  int users() const { return users_; }
  int cells() const { return cells_; }

 private:
  std::size_t idx(int user, int tx) const {
    return static_cast<std::size_t>(user) * static_cast<std::size_t>(cells_) +
           static_cast<std::size_t>(tx);
  }
  int users_ = 0;
  int cells_ = 0;
  std::vector<CMatrix> links_;
};

using Precoders = std::vector<CMatrix>;

struct AuxVars {
  std::vector<CMatrix> w;  // d x d, Hermitian PD
  std::vector<CMatrix> u;  // N x d
  std::vector<CMatrix> z;  // M x d
};

/// Running sums of the quadratic aggregate
///   sum_i Gcal1(V, P^i, H^i) = sum_u [Tr(V_u^H A_cell(u) V_u) - 2 Re Tr(B_u^H V_u)] + c.
/// A is identical for every user of a cell and is stored once per cell.
struct BeamformerState {
  std::vector<CMatrix> a;  // per cell, M_k x M_k
  std::vector<CMatrix> b;  // per user, M x d
  double constant = 0.0;
  int r = 0;

  static BeamformerState zeros(const NetworkConfig& cfg);
  const CMatrix& a_of_user(const NetworkConfig& cfg, int user) const {
    return a[static_cast<std::size_t>(cfg.cell_of(user))];
  }
};

void check_dimensions(const NetworkConfig& cfg, const Precoders& v);
void check_dimensions(const NetworkConfig& cfg, const ChannelRealization& h);

/// J_u = sum_{j,l} H_{u j} V_l V_l^H H_{u j}^H + sigma_u^2 I.
CMatrix received_covariance(const NetworkConfig& cfg, const Precoders& v,
                            const ChannelRealization& h, int user);

/// MSE matrix E_u of the stream estimate U_u^H y_u.
CMatrix mse_matrix(const NetworkConfig& cfg, const Precoders& v, const CMatrix& u_rx,
                   const ChannelRealization& h, int user);

/// log det(E_u^{-1}) in nats.
double rate(const NetworkConfig& cfg, const CMatrix& u_rx, const Precoders& v,
            const ChannelRealization& h, int user);

CMatrix mmse_receiver(const NetworkConfig& cfg, const Precoders& v, const ChannelRealization& h,
                      int user);

/// Sum over users of the rate with per-user MMSE receivers.
double sum_rate(const NetworkConfig& cfg, const Precoders& v, const ChannelRealization& h);

/// g1(V, H) = -sum_rate(V, H).
double g1(const NetworkConfig& cfg, const Precoders& v, const ChannelRealization& h);

/// Closed-form minimizer P(Vbar, H) of Gcal1(Vbar, ., H).
AuxVars surrogate_p_update(const NetworkConfig& cfg, const Precoders& vbar,
                           const ChannelRealization& h);

/// Gcal1(V, P, H) = sum_u [-log det W_u + Tr(W_u E_u(U_u, V)) + rho ||V_u - Z_u||^2 - d_u].
/// `rho` defaults to cfg.rho; passing another value is for negative controls.
double surrogate_objective(const NetworkConfig& cfg, const Precoders& v, const AuxVars& p,
                           const ChannelRealization& h,
                           double rho = std::numeric_limits<double>::quiet_NaN());

/// Adds rho I + sum_l H_{l k}^H U_l W_l U_l^H H_{l k} to A_k and
/// rho Z_u + H_{u k}^H U_u W_u to B_u, plus the constant part of Gcal1.
void accumulate(const NetworkConfig& cfg, BeamformerState& state, const AuxVars& p,
                const ChannelRealization& h,
                double rho = std::numeric_limits<double>::quiet_NaN());

struct VUpdate {
  Precoders v;
  std::vector<double> mu;  // per cell
};

/// Exact minimizer of the accumulated quadratic under per-cell power limits.
VUpdate v_update(const NetworkConfig& cfg, const BeamformerState& state);

/// (1/r) * sum_i Gcal1(V, P^i, H^i), evaluated from the sufficient statistics.
double aggregate_value(const NetworkConfig& cfg, const BeamformerState& state,
                       const Precoders& v);

/// Per-cell total transmit power sum_u Tr(V_u V_u^H).
std::vector<double> cell_powers(const NetworkConfig& cfg, const Precoders& v);

/// Scales each cell's precoders down onto its power ball.
Precoders project_power(const NetworkConfig& cfg, const Precoders& v);

/// Random precoders meeting every power budget with equality.
Precoders random_precoders(const NetworkConfig& cfg, RngStream& rng);

double distance(const Precoders& a, const Precoders& b);
Eigen::VectorXd flatten(const Precoders& v);
Precoders unflatten(const Eigen::VectorXd& x, const Precoders& like);

/// Wirtinger gradient d g1 / d conj(V_u) at V; the real gradient with respect
/// to (Re V, Im V) is twice this.
Precoders g1_gradient(const NetworkConfig& cfg, const Precoders& v, const ChannelRealization& h);

struct DeterministicResult {
  Precoders v;
  std::vector<double> sum_rates;  // after each iteration
};

/// Classical WMMSE on a fixed channel: MMSE receiver, weight, and
/// per-cell power-constrained quadratic transmit update.
DeterministicResult deterministic_wmmse(const NetworkConfig& cfg, const ChannelRealization& h,
                                        const Precoders& v0, int n_iter);

/// The SSUM surrogate model over precoders with channel samples.
class WmmseModel {
 public:
  using Point = Precoders;
  using Sample = ChannelRealization;

  explicit WmmseModel(NetworkConfig cfg);
  /// Uses `rho_override` in the surrogate instead of cfg.rho (negative
  /// controls only; the aggregate is still accumulated with it).
  WmmseModel(NetworkConfig cfg, double rho_override);

  double eval_g1(const Point& v, const Sample& h) const { return g1(cfg_, v, h); }
  double eval_g2(const Point&, const Sample&) const { return 0.0; }
  double eval_ghat1(const Point& v, const Point& vbar, const Sample& h) const;
  void observe(const Point& vbar, const Sample& h);
  Point minimize_aggregate();
  Point project(const Point& v) const { return project_power(cfg_, v); }
  double distance(const Point& a, const Point& b) const { return wmmse::distance(a, b); }
  Eigen::VectorXd to_vector(const Point& v) const { return flatten(v); }
  Point from_vector(const Eigen::VectorXd& x, const Point& like) const {
    return unflatten(x, like);
  }

  const NetworkConfig& config() const { return cfg_; }
  const BeamformerState& state() const { return state_; }
  const std::vector<double>& last_mu() const { return last_mu_; }
  double rho() const { return rho_; }

 private:
  NetworkConfig cfg_;
  double rho_;
  BeamformerState state_;
  std::vector<double> last_mu_;
};

static_assert(FlattenableModel<WmmseModel>);

}  // namespace ssum::wmmse
