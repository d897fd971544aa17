#pragma once

#include <cstdint>
#include <random>

#include "ssum/hermitian.hpp"

namespace ssum {

/// splitmix64 finalizer; used to derive independent stream seeds.
std::uint64_t mix64(std::uint64_t x);

/// Derives a child seed from a parent seed and a label. Stable across runs.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

/// Deterministic random stream identified by (seed, stream id).
///
/// The engine is std::mt19937_64, whose output sequence is fixed by the
/// standard. Distributions are implemented here rather than with <random>
/// distribution classes, whose algorithms are implementation-defined, so the
/// same (seed, id) yields the same samples on every platform.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream_id = 0);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return id_; }

  std::uint64_t next_u64() { return engine_(); }
  /// Uniform on [0, 1).
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);
  double normal();
  double normal(double mean, double stddev) { return mean + stddev * normal(); }
  /// Circularly-symmetric CN(0, variance): independent real and imaginary
  /// parts, each N(0, variance / 2).
  Complex complex_normal(double variance = 1.0);
  CMatrix complex_normal_matrix(Eigen::Index rows, Eigen::Index cols, double variance = 1.0);
  Eigen::MatrixXd normal_matrix(Eigen::Index rows, Eigen::Index cols);
  Eigen::VectorXd normal_vector(Eigen::Index n);

  /// Independent child stream; does not advance this stream.
  RngStream child(std::uint64_t id) const { return RngStream(derive_seed(seed_, id_), id); }

 private:
  std::uint64_t seed_;
  std::uint64_t id_;
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace ssum
