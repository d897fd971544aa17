#pragma once

// Statistical channel model with partial CSI.
//
// Each link (user u, transmitter j) has a large-scale gain sigma_l^2 from a
// hexagonal path-loss layout. The direct link, and every interfering link
// within eta dB of it, carries an MMSE estimate hhat; its true value is
// distributed CN(hhat, sigma_l^2 / (1 + gamma * SNR)). Remaining links are
// Rayleigh on top of the path loss, CN(0, sigma_l^2).

#include <vector>

#include "ssum/rng.hpp"
#include "ssum/wmmse.hpp"

namespace ssum::wmmse {

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

/// Base-station sites on a hexagonal lattice with unit inter-site distance,
/// filled ring by ring, plus the six cluster translations used for
/// wrap-around distances.
struct HexLayout {
  std::vector<Point2> sites;
  std::vector<Point2> wrap_shifts;
  int rings = 0;

  static HexLayout make(int cells);
  /// Euclidean distance, minimized over wrapped copies of the site when
  /// wrap-around is enabled.
  double distance(const Point2& p, int site, bool wrap) const;
  /// Uniform point in the hexagonal cell of `site`.
  Point2 drop_user(int site, RngStream& rng) const;
};

enum class MeanVariant {
  /// Mean of the generative distribution: hhat for estimated links, 0 else.
  Strict,
  /// Non-estimated links replaced by sigma_l times the all-ones matrix.
  PathLossMagnitude,
};

struct LinkStats {
  double gain = 0.0;  // sigma_l^2
  bool estimated = false;
  CMatrix mean;               // hhat or 0
  double sample_variance = 0;  // per-entry variance of the draw around `mean`
};

class ChannelModel {
 public:
  /// Draws a hexagonal layout, path losses normalized so that the median
  /// direct-link SNR at full power is cfg.csi.snr_db, and the channel
  /// estimates of the estimated links.
  static ChannelModel generate(const NetworkConfig& cfg, RngStream& rng);
  /// Uses the given link gains (index u * cells + j) and draws estimates.
  static ChannelModel from_gains(const NetworkConfig& cfg, std::vector<double> gains,
                                 RngStream& rng);
  /// Point mass at h.
  static ChannelModel deterministic(const NetworkConfig& cfg, const ChannelRealization& h);

  ChannelRealization sample(RngStream& rng) const;
  ChannelRealization mean_channels(MeanVariant variant) const;

  const LinkStats& link(int user, int tx) const;
  double estimated_fraction() const;
  const NetworkConfig& config() const { return cfg_; }

 private:
  ChannelModel(const NetworkConfig& cfg) : cfg_(cfg) {}
  void build_links(const std::vector<double>& gains, RngStream& rng);

  NetworkConfig cfg_;
  std::vector<LinkStats> links_;
};

/// Draws one realization from the model.
inline ChannelRealization sample_channels(const ChannelModel& model, RngStream& rng) {
  return model.sample(rng);
}

/// (1/n) sum over the given draws of the network sum rate with per-draw
/// MMSE receivers. Per-draw values are combined by pairwise summation.
double ergodic_sum_rate(const NetworkConfig& cfg, const Precoders& v,
                        const std::vector<ChannelRealization>& draws,
                        double* stderr_out = nullptr);

/// Same, over n_mc fresh draws; draw i uses the child stream i of `rng`.
double ergodic_sum_rate(const Precoders& v, const ChannelModel& model, int n_mc,
                        const RngStream& rng, double* stderr_out = nullptr);

std::vector<ChannelRealization> draw_evaluation_set(const ChannelModel& model, int n,
                                                    const RngStream& rng);

}  // namespace ssum::wmmse

namespace ssum::wmmse {

/// Stochastic WMMSE: SSUM with the weighted-MSE surrogate, channel samples
/// drawn from `model` using `rng`. Each record's sampled_obj is the negated
/// instantaneous sum rate of the previous iterate on the new draw.
RunTrace<Precoders> stochastic_wmmse(
    const ChannelModel& model, const Precoders& x0, RngStream& rng, const RunOptions& opts,
    const std::function<void(int, const Precoders&)>& on_iterate = {});

}  // namespace ssum::wmmse
