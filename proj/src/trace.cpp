#include "ssum/trace.hpp"

#include <algorithm>
#include <ostream>
#include <sstream>

#include "ssum/errors.hpp"
#include "ssum/numeric.hpp"

namespace ssum {

void write_trace_csv(std::span<const TraceRecord> records, std::ostream& out) {
  out << kTraceCsvHeader << '\n';
  for (const auto& rec : records) {
    out << rec.r << ',' << format_double(rec.step_norm) << ',' << format_double(rec.surrogate_gap)
        << ',' << format_double(rec.sampled_obj) << '\n';
  }
}

std::string trace_csv(std::span<const TraceRecord> records) {
  std::ostringstream os;
  write_trace_csv(records, os);
  return os.str();
}

StepNormReport step_norm_bound_check(std::span<const TraceRecord> records, int r_min, double slack,
                                     int r_start) {
  int last = records.empty() ? 0 : records.back().r;
  if (last <= 2 * r_min) {
    throw TraceTooShort("step_norm_bound_check: trace ends at r=" + std::to_string(last) +
                        ", need > " + std::to_string(2 * r_min));
  }
  StepNormReport rep;
  for (const auto& rec : records) {
    double scaled = rec.r * rec.step_norm;
    if (rec.r >= r_start && rec.r <= r_min) {
      rep.constant = std::max(rep.constant, scaled);
    } else if (rec.r > r_min) {
      rep.tail_max = std::max(rep.tail_max, scaled);
    }
  }
  rep.ok = rep.tail_max <= slack * rep.constant;
  return rep;
}

}  // namespace ssum
