#pragma once

#include <optional>

#include "stdsh/world.hpp"

namespace stdsh::metrics {

// Mean network delayed passengers per second over `horizon` seconds.
double anp(const sim::MetricsLog& log, int horizon);
double anp(const sim::MetricsLog& log);  // horizon = log length

// Mean queued road vehicles per second (trams excluded).
double aql(const sim::MetricsLog& log);

// Mean waiting seconds over completed vehicles of the mode; nullopt when no
// such vehicle completed its trip.
std::optional<double> awt(const sim::MetricsLog& log, sim::Mode mode);
inline std::optional<double> awt_bus(const sim::MetricsLog& log) { return awt(log, sim::Mode::kBus); }
inline std::optional<double> awt_tram(const sim::MetricsLog& log) { return awt(log, sim::Mode::kTram); }

}  // namespace stdsh::metrics
