#pragma once

#include <iosfwd>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace ssum {

struct TraceRecord {
  int r = 0;
  /// ||x^r - x^{r-1}||
  double step_norm = 0.0;
  /// fhat^r(x^r) - f^r(x^r); NaN when gap tracking is off.
  double surrogate_gap = std::numeric_limits<double>::quiet_NaN();
  /// g(x^{r-1}, xi^r)
  double sampled_obj = 0.0;
  /// fhat^r(x^r) and fhat^r(x^{r-1}); NaN when gap tracking is off.
  double surrogate_value = std::numeric_limits<double>::quiet_NaN();
  double surrogate_value_prev = std::numeric_limits<double>::quiet_NaN();
};

template <class Point>
struct RunTrace {
  std::vector<TraceRecord> records;
  Point final_point;
  int iterations = 0;
  bool stopped_early = false;
};

inline constexpr const char* kTraceCsvHeader = "r,step_norm,surrogate_gap,sampled_obj";

void write_trace_csv(std::span<const TraceRecord> records, std::ostream& out);
std::string trace_csv(std::span<const TraceRecord> records);

struct StepNormReport {
  bool ok = false;
  /// C = max over r in [r_start, r_min] of r * step_norm(r)
  double constant = 0.0;
  /// max over r > r_min of r * step_norm(r)
  double tail_max = 0.0;
};

/// Empirical O(1/r) step-size check. Requires the trace to extend beyond
/// 2 * r_min iterations; throws TraceTooShort otherwise.
StepNormReport step_norm_bound_check(std::span<const TraceRecord> records, int r_min, double slack,
                                     int r_start = 1);

}  // namespace ssum
