#pragma once

#include <cstddef>
#include <span>
#include <string>

namespace ssum {

/// Pairwise (cascade) summation. The result depends only on the order of the
/// input, never on how the values were produced, so parallel producers that
/// write into fixed slots give reproducible totals.
double pairwise_sum(std::span<const double> values);

inline double pairwise_mean(std::span<const double> values) {
  return values.empty() ? 0.0 : pairwise_sum(values) / static_cast<double>(values.size());
}

/// Sample standard error of the mean (0 for fewer than two values).
double standard_error(std::span<const double> values);

/// Decimal with 17 significant digits (round-trips exactly).
std::string format_double(double v);

}  // namespace ssum
