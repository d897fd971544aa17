#include "ssum/wmmse.hpp"

#include <cmath>
#include <string>

namespace ssum::wmmse {

namespace {

std::size_t sz(int i) { return static_cast<std::size_t>(i); }

CMatrix identity(Eigen::Index n) { return CMatrix::Identity(n, n); }

double resolve_rho(const NetworkConfig& cfg, double rho) { return std::isnan(rho) ? cfg.rho : rho; }

/// sum_l H_{l k}^H U_l W_l U_l^H H_{l k} over every user l in the network.
CMatrix interference_curvature(const NetworkConfig& cfg, const AuxVars& p,
                               const ChannelRealization& h, int cell) {
  const int m = cfg.tx_antennas[sz(cell)];
  CMatrix q = CMatrix::Zero(m, m);
  for (int l = 0; l < cfg.num_users(); ++l) {
    CMatrix t = p.u[sz(l)].adjoint() * h(l, cell);  // d x M
    q.noalias() += t.adjoint() * p.w[sz(l)] * t;
  }
  return symmetrize(q);
}

}  // namespace

NetworkConfig NetworkConfig::uniform(int cells, int users_per_cell, int tx_antennas,
                                     int rx_antennas, int streams, double power, double noise,
                                     double rho) {
  NetworkConfig cfg;
  cfg.cells = cells;
  cfg.users_per_cell.assign(sz(cells), users_per_cell);
  cfg.tx_antennas.assign(sz(cells), tx_antennas);
  cfg.power.assign(sz(cells), power);
  const int users = cells * users_per_cell;
  cfg.rx_antennas.assign(sz(users), rx_antennas);
  cfg.streams.assign(sz(users), streams);
  cfg.noise.assign(sz(users), noise);
  cfg.rho = rho > 0.0 ? rho : 0.01 * power / tx_antennas;
  cfg.validate();
  return cfg;
}

void NetworkConfig::validate() {
  auto fail = [](const std::string& msg) { throw ConfigError("network: " + msg); };
  if (cells < 1) fail("at least one cell required");
  if (users_per_cell.size() != sz(cells) || tx_antennas.size() != sz(cells) ||
      power.size() != sz(cells)) {
    fail("per-cell arrays must have one entry per cell");
  }
  int users = 0;
  cell_first_.assign(sz(cells), 0);
  user_cell_.clear();
  for (int k = 0; k < cells; ++k) {
    if (users_per_cell[sz(k)] < 1) fail("every cell needs at least one user");
    if (tx_antennas[sz(k)] < 1) fail("tx antennas must be positive");
    if (!(power[sz(k)] > 0.0)) fail("power budgets must be positive");
    cell_first_[sz(k)] = users;
    for (int i = 0; i < users_per_cell[sz(k)]; ++i) user_cell_.push_back(k);
    users += users_per_cell[sz(k)];
  }
  if (rx_antennas.size() != sz(users) || streams.size() != sz(users) ||
      noise.size() != sz(users)) {
    fail("per-user arrays must have one entry per user (" + std::to_string(users) + ")");
  }
  for (int u = 0; u < users; ++u) {
    int m = tx_antennas[sz(user_cell_[sz(u)])];
    if (rx_antennas[sz(u)] < 1) fail("rx antennas must be positive");
    if (streams[sz(u)] < 1 || streams[sz(u)] > std::min(m, rx_antennas[sz(u)])) {
      fail("streams must satisfy 1 <= d <= min(M, N)");
    }
    if (!(noise[sz(u)] > 0.0)) fail("noise power must be positive");
  }
  if (!(rho > 0.0)) fail("rho must be positive");
}

ChannelRealization ChannelRealization::zeros(const NetworkConfig& cfg) {
  ChannelRealization h(cfg.num_users(), cfg.cells);
  for (int u = 0; u < cfg.num_users(); ++u)
    for (int j = 0; j < cfg.cells; ++j)
      h(u, j) = CMatrix::Zero(cfg.rx_antennas[sz(u)], cfg.tx_antennas[sz(j)]);
  return h;
}

BeamformerState BeamformerState::zeros(const NetworkConfig& cfg) {
  BeamformerState s;
  for (int k = 0; k < cfg.cells; ++k) {
    s.a.push_back(CMatrix::Zero(cfg.tx_antennas[sz(k)], cfg.tx_antennas[sz(k)]));
  }
  for (int u = 0; u < cfg.num_users(); ++u) {
    s.b.push_back(CMatrix::Zero(cfg.tx_of_user(u), cfg.streams[sz(u)]));
  }
  return s;
}

void check_dimensions(const NetworkConfig& cfg, const Precoders& v) {
  if (v.size() != sz(cfg.num_users())) {
    throw DimensionMismatch("precoders: expected " + std::to_string(cfg.num_users()) + " users");
  }
  for (int u = 0; u < cfg.num_users(); ++u) {
    if (v[sz(u)].rows() != cfg.tx_of_user(u) || v[sz(u)].cols() != cfg.streams[sz(u)]) {
      throw DimensionMismatch("precoder of user " + std::to_string(u) + " has wrong shape");
    }
  }
}

void check_dimensions(const NetworkConfig& cfg, const ChannelRealization& h) {
  if (h.users() != cfg.num_users() || h.cells() != cfg.cells) {
    throw DimensionMismatch("channel realization does not match the network");
  }
  for (int u = 0; u < cfg.num_users(); ++u)
    for (int j = 0; j < cfg.cells; ++j)
      if (h(u, j).rows() != cfg.rx_antennas[sz(u)] || h(u, j).cols() != cfg.tx_antennas[sz(j)]) {
        throw DimensionMismatch("channel (" + std::to_string(u) + "," + std::to_string(j) +
                                ") has wrong shape");
      }
}

CMatrix received_covariance(const NetworkConfig& cfg, const Precoders& v,
                            const ChannelRealization& h, int user) {
  const int n = cfg.rx_antennas[sz(user)];
  CMatrix j_cov = cfg.noise[sz(user)] * identity(n);
  for (int l = 0; l < cfg.num_users(); ++l) {
    CMatrix hv = h(user, cfg.cell_of(l)) * v[sz(l)];
    j_cov.noalias() += hv * hv.adjoint();
  }
  return symmetrize(j_cov);
}

CMatrix mse_matrix(const NetworkConfig& cfg, const Precoders& v, const CMatrix& u_rx,
                   const ChannelRealization& h, int user) {
  const int d = cfg.streams[sz(user)];
  if (u_rx.rows() != cfg.rx_antennas[sz(user)] || u_rx.cols() != d) {
    throw DimensionMismatch("mse_matrix: receiver has wrong shape");
  }
  const int k = cfg.cell_of(user);
  CMatrix own = identity(d) - u_rx.adjoint() * h(user, k) * v[sz(user)];
  CMatrix e = own * own.adjoint();
  for (int l = 0; l < cfg.num_users(); ++l) {
    if (l == user) continue;
    CMatrix t = u_rx.adjoint() * h(user, cfg.cell_of(l)) * v[sz(l)];
    e.noalias() += t * t.adjoint();
  }
  e.noalias() += cfg.noise[sz(user)] * (u_rx.adjoint() * u_rx);
  return symmetrize(e);
}

double rate(const NetworkConfig& cfg, const CMatrix& u_rx, const Precoders& v,
            const ChannelRealization& h, int user) {
  return -chol_logdet(mse_matrix(cfg, v, u_rx, h, user));
}

CMatrix mmse_receiver(const NetworkConfig& cfg, const Precoders& v, const ChannelRealization& h,
                      int user) {
  CMatrix j_cov = received_covariance(cfg, v, h, user);
  return hermitian_solve(j_cov, h(user, cfg.cell_of(user)) * v[sz(user)]);
}

double sum_rate(const NetworkConfig& cfg, const Precoders& v, const ChannelRealization& h) {
  double total = 0.0;
  for (int u = 0; u < cfg.num_users(); ++u) {
    total += rate(cfg, mmse_receiver(cfg, v, h, u), v, h, u);
  }
  return total;
}

double g1(const NetworkConfig& cfg, const Precoders& v, const ChannelRealization& h) {
  return -sum_rate(cfg, v, h);
}

AuxVars surrogate_p_update(const NetworkConfig& cfg, const Precoders& vbar,
                           const ChannelRealization& h) {
  AuxVars p;
  const int users = cfg.num_users();
  p.u.reserve(sz(users));
  p.w.reserve(sz(users));
  p.z.reserve(sz(users));
  for (int u = 0; u < users; ++u) {
    CMatrix u_rx = mmse_receiver(cfg, vbar, h, u);
    const int d = cfg.streams[sz(u)];
    CMatrix m = identity(d) - u_rx.adjoint() * h(u, cfg.cell_of(u)) * vbar[sz(u)];
    Eigen::FullPivLU<CMatrix> lu(m);
    if (!lu.isInvertible()) {
      throw SingularW("surrogate_p_update: I - U^H H V is singular for user " +
                      std::to_string(u));
    }
    CMatrix w = symmetrize(lu.inverse());
    if (!w.allFinite()) throw SingularW("surrogate_p_update: non-finite weight matrix");
    p.u.push_back(std::move(u_rx));
    p.w.push_back(std::move(w));
    p.z.push_back(vbar[sz(u)]);
  }
  return p;
}

double surrogate_objective(const NetworkConfig& cfg, const Precoders& v, const AuxVars& p,
                           const ChannelRealization& h, double rho) {
  rho = resolve_rho(cfg, rho);
  double total = 0.0;
  for (int u = 0; u < cfg.num_users(); ++u) {
    const CMatrix& w = p.w[sz(u)];
    CMatrix e = mse_matrix(cfg, v, p.u[sz(u)], h, u);
    total += -chol_logdet(w) + (w * e).trace().real() +
             rho * (v[sz(u)] - p.z[sz(u)]).squaredNorm() - cfg.streams[sz(u)];
  }
  return total;
}

void accumulate(const NetworkConfig& cfg, BeamformerState& state, const AuxVars& p,
                const ChannelRealization& h, double rho) {
  rho = resolve_rho(cfg, rho);
  if (state.a.size() != sz(cfg.cells) || state.b.size() != sz(cfg.num_users()) ||
      p.w.size() != sz(cfg.num_users())) {
    throw DimensionMismatch("accumulate: state or aux vars do not match the network");
  }
  for (int k = 0; k < cfg.cells; ++k) {
    CMatrix& a = state.a[sz(k)];
    a += interference_curvature(cfg, p, h, k);
    a.diagonal().array() += rho;
  }
  for (int u = 0; u < cfg.num_users(); ++u) {
    const CMatrix& w = p.w[sz(u)];
    const CMatrix& u_rx = p.u[sz(u)];
    state.b[sz(u)] += rho * p.z[sz(u)] + h(u, cfg.cell_of(u)).adjoint() * u_rx * w;
    CMatrix fixed = identity(w.rows()) + cfg.noise[sz(u)] * (u_rx.adjoint() * u_rx);
    state.constant += -chol_logdet(w) + (w * fixed).trace().real() +
                      rho * p.z[sz(u)].squaredNorm() - cfg.streams[sz(u)];
  }
  state.r += 1;
}

VUpdate v_update(const NetworkConfig& cfg, const BeamformerState& state) {
  if (state.r < 1) throw Error("v_update: no samples accumulated");
  VUpdate out;
  out.v.resize(sz(cfg.num_users()));
  out.mu.assign(sz(cfg.cells), 0.0);
  for (int k = 0; k < cfg.cells; ++k) {
    const int first = cfg.first_user(k);
    const int count = cfg.users_per_cell[sz(k)];
    Eigen::Index cols = 0;
    for (int u = first; u < first + count; ++u) cols += state.b[sz(u)].cols();
    CMatrix b_cat(cfg.tx_antennas[sz(k)], cols);
    Eigen::Index c = 0;
    for (int u = first; u < first + count; ++u) {
      b_cat.middleCols(c, state.b[sz(u)].cols()) = state.b[sz(u)];
      c += state.b[sz(u)].cols();
    }
    PowerSolution sol = power_bisection(state.a[sz(k)], b_cat, cfg.power[sz(k)]);
    out.mu[sz(k)] = sol.mu;
    c = 0;
    for (int u = first; u < first + count; ++u) {
      out.v[sz(u)] = sol.v.middleCols(c, state.b[sz(u)].cols());
      c += state.b[sz(u)].cols();
    }
  }
  return out;
}

double aggregate_value(const NetworkConfig& cfg, const BeamformerState& state,
                       const Precoders& v) {
  if (state.r < 1) throw Error("aggregate_value: no samples accumulated");
  double total = state.constant;
  for (int u = 0; u < cfg.num_users(); ++u) {
    const CMatrix& vu = v[sz(u)];
    total += (vu.adjoint() * state.a_of_user(cfg, u) * vu).trace().real() -
             2.0 * (state.b[sz(u)].adjoint() * vu).trace().real();
  }
  return total / state.r;
}

std::vector<double> cell_powers(const NetworkConfig& cfg, const Precoders& v) {
  std::vector<double> p(sz(cfg.cells), 0.0);
  for (int u = 0; u < cfg.num_users(); ++u) p[sz(cfg.cell_of(u))] += v[sz(u)].squaredNorm();
  return p;
}

Precoders project_power(const NetworkConfig& cfg, const Precoders& v) {
  Precoders out = v;
  std::vector<double> p = cell_powers(cfg, v);
  for (int u = 0; u < cfg.num_users(); ++u) {
    const int k = cfg.cell_of(u);
    if (p[sz(k)] > cfg.power[sz(k)]) out[sz(u)] *= std::sqrt(cfg.power[sz(k)] / p[sz(k)]);
  }
  return out;
}

Precoders random_precoders(const NetworkConfig& cfg, RngStream& rng) {
  Precoders v;
  for (int u = 0; u < cfg.num_users(); ++u) {
    v.push_back(rng.complex_normal_matrix(cfg.tx_of_user(u), cfg.streams[sz(u)]));
  }
  std::vector<double> p = cell_powers(cfg, v);
  for (int u = 0; u < cfg.num_users(); ++u) {
    const int k = cfg.cell_of(u);
    v[sz(u)] *= std::sqrt(cfg.power[sz(k)] / p[sz(k)]);
  }
  return v;
}

double distance(const Precoders& a, const Precoders& b) {
  if (a.size() != b.size()) throw DimensionMismatch("distance: precoder sets differ in size");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += (a[i] - b[i]).squaredNorm();
  return std::sqrt(acc);
}

Eigen::VectorXd flatten(const Precoders& v) {
  Eigen::Index n = 0;
  for (const auto& m : v) n += 2 * m.size();
  Eigen::VectorXd x(n);
  Eigen::Index pos = 0;
  for (const auto& m : v) {
    for (Eigen::Index i = 0; i < m.size(); ++i) {
      x(pos++) = m.data()[i].real();
      x(pos++) = m.data()[i].imag();
    }
  }
  return x;
}

Precoders unflatten(const Eigen::VectorXd& x, const Precoders& like) {
  Precoders v = like;
  Eigen::Index pos = 0;
  for (auto& m : v) {
    for (Eigen::Index i = 0; i < m.size(); ++i) {
      if (pos + 1 >= x.size()) throw DimensionMismatch("unflatten: vector too short");
      m.data()[i] = Complex(x(pos), x(pos + 1));
      pos += 2;
    }
  }
  if (pos != x.size()) throw DimensionMismatch("unflatten: vector length mismatch");
  return v;
}

Precoders g1_gradient(const NetworkConfig& cfg, const Precoders& v, const ChannelRealization& h) {
  AuxVars p = surrogate_p_update(cfg, v, h);
  std::vector<CMatrix> q;
  for (int k = 0; k < cfg.cells; ++k) q.push_back(interference_curvature(cfg, p, h, k));
  Precoders grad;
  for (int u = 0; u < cfg.num_users(); ++u) {
    const int k = cfg.cell_of(u);
    grad.push_back(q[sz(k)] * v[sz(u)] - h(u, k).adjoint() * p.u[sz(u)] * p.w[sz(u)]);
  }
  return grad;
}

DeterministicResult deterministic_wmmse(const NetworkConfig& cfg, const ChannelRealization& h,
                                        const Precoders& v0, int n_iter) {
  check_dimensions(cfg, v0);
  check_dimensions(cfg, h);
  DeterministicResult res;
  res.v = v0;
  for (int it = 0; it < n_iter; ++it) {
    AuxVars p = surrogate_p_update(cfg, res.v, h);
    for (int k = 0; k < cfg.cells; ++k) {
      CMatrix q = interference_curvature(cfg, p, h, k);
      const int first = cfg.first_user(k);
      const int count = cfg.users_per_cell[sz(k)];
      std::vector<CMatrix> rhs;
      Eigen::Index cols = 0;
      for (int u = first; u < first + count; ++u) {
        rhs.push_back(h(u, k).adjoint() * p.u[sz(u)] * p.w[sz(u)]);
        cols += rhs.back().cols();
      }
      CMatrix b_cat(q.rows(), cols);
      Eigen::Index c = 0;
      for (const auto& m : rhs) {
        b_cat.middleCols(c, m.cols()) = m;
        c += m.cols();
      }
      PowerSolution sol = power_bisection(q, b_cat, cfg.power[sz(k)]);
      c = 0;
      for (int u = first; u < first + count; ++u) {
        res.v[sz(u)] = sol.v.middleCols(c, cfg.streams[sz(u)]);
        c += cfg.streams[sz(u)];
      }
    }
    res.sum_rates.push_back(sum_rate(cfg, res.v, h));
  }
  return res;
}

WmmseModel::WmmseModel(NetworkConfig cfg) : WmmseModel(cfg, cfg.rho) {}

WmmseModel::WmmseModel(NetworkConfig cfg, double rho_override)
    : cfg_(std::move(cfg)), rho_(rho_override), state_(BeamformerState::zeros(cfg_)) {}

double WmmseModel::eval_ghat1(const Point& v, const Point& vbar, const Sample& h) const {
  return surrogate_objective(cfg_, v, surrogate_p_update(cfg_, vbar, h), h, rho_);
}

void WmmseModel::observe(const Point& vbar, const Sample& h) {
  accumulate(cfg_, state_, surrogate_p_update(cfg_, vbar, h), h, rho_);
}

WmmseModel::Point WmmseModel::minimize_aggregate() {
  VUpdate up = v_update(cfg_, state_);
  last_mu_ = std::move(up.mu);
  return std::move(up.v);
}

}  // namespace ssum::wmmse
