#include "ssum/channel_model.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "ssum/numeric.hpp"

namespace ssum::wmmse {

namespace {

std::size_t sz(int i) { return static_cast<std::size_t>(i); }

constexpr double kSqrt3 = 1.7320508075688772;

Point2 axial_to_point(int q, int r) { return {q + 0.5 * r, 0.5 * kSqrt3 * r}; }

constexpr std::array<std::array<int, 2>, 6> kAxialDirs{
    {{1, 0}, {1, -1}, {0, -1}, {-1, 0}, {-1, 1}, {0, 1}}};

double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

HexLayout HexLayout::make(int cells) {
  if (cells < 1) throw ConfigError("hex layout: at least one cell required");
  HexLayout layout;
  while (3 * layout.rings * layout.rings + 3 * layout.rings + 1 < cells) ++layout.rings;

  std::vector<std::array<int, 2>> axial{{0, 0}};
  for (int k = 1; k <= layout.rings; ++k) {
    std::array<int, 2> cur{-k, k};  // k steps along direction 4
    for (const auto& dir : kAxialDirs) {
      for (int s = 0; s < k; ++s) {
        axial.push_back(cur);
        cur[0] += dir[0];
        cur[1] += dir[1];
      }
    }
  }
  for (int i = 0; i < cells; ++i) {
    layout.sites.push_back(axial_to_point(axial[sz(i)][0], axial[sz(i)][1]));
  }
  if (layout.rings > 0) {
    int q = 2 * layout.rings + 1;
    int r = -layout.rings;
    for (int i = 0; i < 6; ++i) {
      layout.wrap_shifts.push_back(axial_to_point(q, r));
      int nq = -r;
      int nr = q + r;
      q = nq;
      r = nr;
    }
  }
  return layout;
}

double HexLayout::distance(const Point2& p, int site, bool wrap) const {
  const Point2& s = sites.at(sz(site));
  double best = std::hypot(p.x - s.x, p.y - s.y);
  if (wrap) {
    for (const auto& w : wrap_shifts) {
      best = std::min(best, std::hypot(p.x - s.x - w.x, p.y - s.y - w.y));
    }
  }
  return best;
}

Point2 HexLayout::drop_user(int site, RngStream& rng) const {
  const Point2& s = sites.at(sz(site));
  const double half = 1.0 / kSqrt3;
  for (;;) {
    double dx = rng.uniform(-half, half);
    double dy = rng.uniform(-half, half);
    bool inside = true;
    for (int i = 0; i < 6 && inside; ++i) {
      double ang = i * (std::acos(-1.0) / 3.0);
      inside = dx * std::cos(ang) + dy * std::sin(ang) <= 0.5;
    }
    if (inside) return {s.x + dx, s.y + dy};
  }
}

ChannelModel ChannelModel::generate(const NetworkConfig& cfg, RngStream& rng) {
  HexLayout layout = HexLayout::make(cfg.cells);
  const double d0 = cfg.pathloss.min_distance;
  const int users = cfg.num_users();
  std::vector<double> gains(sz(users * cfg.cells));
  for (int u = 0; u < users; ++u) {
    const int k = cfg.cell_of(u);
    Point2 p;
    do {
      p = layout.drop_user(k, rng);
    } while (layout.distance(p, k, false) < d0);
    for (int j = 0; j < cfg.cells; ++j) {
      double d = std::max(layout.distance(p, j, cfg.pathloss.wrap_around), d0);
      gains[sz(u * cfg.cells + j)] = std::pow(d / d0, -cfg.pathloss.exponent);
    }
  }
  std::vector<double> direct_snr;
  for (int u = 0; u < users; ++u) {
    const int k = cfg.cell_of(u);
    direct_snr.push_back(cfg.power[sz(k)] * gains[sz(u * cfg.cells + k)] / cfg.noise[sz(u)]);
  }
  double scale = db_to_linear(cfg.csi.snr_db) / median(direct_snr);
  for (double& g : gains) g *= scale;
  return from_gains(cfg, std::move(gains), rng);
}

ChannelModel ChannelModel::from_gains(const NetworkConfig& cfg, std::vector<double> gains,
                                      RngStream& rng) {
  if (gains.size() != sz(cfg.num_users() * cfg.cells)) {
    throw DimensionMismatch("channel model: one gain per (user, transmitter) link required");
  }
  ChannelModel model(cfg);
  model.build_links(gains, rng);
  return model;
}

void ChannelModel::build_links(const std::vector<double>& gains, RngStream& rng) {
  const double snr = db_to_linear(cfg_.csi.snr_db);
  const double error_fraction = 1.0 / (1.0 + cfg_.csi.gamma_csi * snr);
  links_.clear();
  links_.reserve(gains.size());
  for (int u = 0; u < cfg_.num_users(); ++u) {
    const int k = cfg_.cell_of(u);
    const double direct = gains[sz(u * cfg_.cells + k)];
    for (int j = 0; j < cfg_.cells; ++j) {
      LinkStats link;
      link.gain = gains[sz(u * cfg_.cells + j)];
      const Eigen::Index n = cfg_.rx_antennas[sz(u)];
      const Eigen::Index m = cfg_.tx_antennas[sz(j)];
      link.estimated = j == k || 10.0 * std::log10(link.gain / direct) >= -cfg_.csi.eta_db;
      if (link.estimated) {
        const double err = std::isfinite(error_fraction) ? link.gain * error_fraction : 0.0;
        link.mean = rng.complex_normal_matrix(n, m, std::max(0.0, link.gain - err));
        link.sample_variance = err;
      } else {
        link.mean = CMatrix::Zero(n, m);
        link.sample_variance = link.gain;
      }
      links_.push_back(std::move(link));
    }
  }
}

ChannelModel ChannelModel::deterministic(const NetworkConfig& cfg, const ChannelRealization& h) {
  check_dimensions(cfg, h);
  ChannelModel model(cfg);
  for (int u = 0; u < cfg.num_users(); ++u) {
    for (int j = 0; j < cfg.cells; ++j) {
      LinkStats link;
      link.mean = h(u, j);
      link.gain = h(u, j).squaredNorm() / static_cast<double>(std::max<Eigen::Index>(1, h(u, j).size()));
      link.estimated = true;
      link.sample_variance = 0.0;
      model.links_.push_back(std::move(link));
    }
  }
  return model;
}

const LinkStats& ChannelModel::link(int user, int tx) const {
  return links_.at(sz(user * cfg_.cells + tx));
}

ChannelRealization ChannelModel::sample(RngStream& rng) const {
  ChannelRealization h(cfg_.num_users(), cfg_.cells);
  for (int u = 0; u < cfg_.num_users(); ++u) {
    for (int j = 0; j < cfg_.cells; ++j) {
      const LinkStats& l = link(u, j);
      if (l.sample_variance > 0.0) {
        h(u, j) = l.mean + rng.complex_normal_matrix(l.mean.rows(), l.mean.cols(),
                                                     l.sample_variance);
      } else {
        h(u, j) = l.mean;
      }
    }
  }
  return h;
}

ChannelRealization ChannelModel::mean_channels(MeanVariant variant) const {
  ChannelRealization h(cfg_.num_users(), cfg_.cells);
  for (int u = 0; u < cfg_.num_users(); ++u) {
    for (int j = 0; j < cfg_.cells; ++j) {
      const LinkStats& l = link(u, j);
      if (l.estimated || variant == MeanVariant::Strict) {
        h(u, j) = l.mean;
      } else {
        h(u, j) = CMatrix::Constant(l.mean.rows(), l.mean.cols(), Complex(std::sqrt(l.gain), 0));
      }
    }
  }
  return h;
}

double ChannelModel::estimated_fraction() const {
  if (links_.empty()) return 0.0;
  auto n = std::count_if(links_.begin(), links_.end(), [](const LinkStats& l) { return l.estimated; });
  return static_cast<double>(n) / static_cast<double>(links_.size());
}

double ergodic_sum_rate(const NetworkConfig& cfg, const Precoders& v,
                        const std::vector<ChannelRealization>& draws, double* stderr_out) {
  std::vector<double> vals(draws.size());
  for (std::size_t i = 0; i < draws.size(); ++i) vals[i] = sum_rate(cfg, v, draws[i]);
  if (stderr_out) *stderr_out = standard_error(vals);
  return pairwise_mean(vals);
}

std::vector<ChannelRealization> draw_evaluation_set(const ChannelModel& model, int n,
                                                    const RngStream& rng) {
  std::vector<ChannelRealization> draws;
  draws.reserve(sz(std::max(0, n)));
  for (int i = 0; i < n; ++i) {
    RngStream child = rng.child(static_cast<std::uint64_t>(i));
    draws.push_back(model.sample(child));
  }
  return draws;
}

double ergodic_sum_rate(const Precoders& v, const ChannelModel& model, int n_mc,
                        const RngStream& rng, double* stderr_out) {
  if (n_mc < 1) throw Error("ergodic_sum_rate: n_mc must be >= 1");
  return ergodic_sum_rate(model.config(), v, draw_evaluation_set(model, n_mc, rng), stderr_out);
}

}  // namespace ssum::wmmse

namespace ssum::wmmse {

RunTrace<Precoders> stochastic_wmmse(const ChannelModel& model, const Precoders& x0,
                                     RngStream& rng, const RunOptions& opts,
                                     const std::function<void(int, const Precoders&)>& on_iterate) {
  check_dimensions(model.config(), x0);
  WmmseModel surrogate(model.config());
  return run_ssum(surrogate, [&] { return model.sample(rng); }, x0, opts, on_iterate);
}

}  // namespace ssum::wmmse
