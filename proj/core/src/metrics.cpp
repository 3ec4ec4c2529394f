#include "stdsh/metrics.hpp"

#include <stdexcept>

namespace stdsh::metrics {

double anp(const sim::MetricsLog& log, int horizon) {
  if (horizon < 1) throw std::invalid_argument("anp: horizon must be >= 1");
  if (log.seconds.empty()) throw std::invalid_argument("anp: empty log");
  std::int64_t total = 0;
  for (const auto& s : log.seconds) total += s.network_delayed;
  return static_cast<double>(total) / horizon;
}

double anp(const sim::MetricsLog& log) { return anp(log, static_cast<int>(log.seconds.size())); }

double aql(const sim::MetricsLog& log) {
  if (log.seconds.empty()) throw std::invalid_argument("aql: empty log");
  std::int64_t total = 0;
  for (const auto& s : log.seconds) total += s.network_queued;
  return static_cast<double>(total) / static_cast<double>(log.seconds.size());
}

std::optional<double> awt(const sim::MetricsLog& log, sim::Mode mode) {
  std::int64_t total = 0, count = 0;
  for (const auto& v : log.transit) {
    if (v.mode != mode || !v.completed) continue;
    total += v.waiting_s;
    ++count;
  }
  if (count == 0) return std::nullopt;
  return static_cast<double>(total) / static_cast<double>(count);
}

}  // namespace stdsh::metrics
