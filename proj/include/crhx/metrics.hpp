#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>

#include <boost/math/distributions/students_t.hpp>

namespace crhx {

// Monotone event counters for one replication. Merging replications is
// counter addition; clock_horizon accumulates observed (post-warmup) time.
struct MetricsLedger {
    std::uint64_t new_arrivals = 0;
    std::uint64_t blocked_new = 0;
    std::uint64_t admitted_new = 0;
    std::uint64_t handover_requests = 0;
    std::uint64_t handover_successes = 0;
    // Subset of handover_successes: requests resolved because the call's
    // holding time expired while it was still waiting (a completion, not a
    // failure, so it closes on the success side of the ledger).
    std::uint64_t resolved_by_completion = 0;
    std::uint64_t handover_failures = 0;
    std::uint64_t forced_terminations = 0;
    std::uint64_t completions = 0;
    std::uint64_t exchanges = 0;
    std::uint64_t still_queued_at_horizon = 0;
    std::uint64_t in_flight_at_horizon = 0;
    double clock_horizon = 0.0;   // seconds of measured simulated time
    double busy_channel_time = 0.0; // channel-seconds over both cells

    MetricsLedger& operator+=(const MetricsLedger& o) {
        new_arrivals += o.new_arrivals;
        blocked_new += o.blocked_new;
        admitted_new += o.admitted_new;
        handover_requests += o.handover_requests;
        handover_successes += o.handover_successes;
        resolved_by_completion += o.resolved_by_completion;
        handover_failures += o.handover_failures;
        forced_terminations += o.forced_terminations;
        completions += o.completions;
        exchanges += o.exchanges;
        still_queued_at_horizon += o.still_queued_at_horizon;
        in_flight_at_horizon += o.in_flight_at_horizon;
        clock_horizon += o.clock_horizon;
        busy_channel_time += o.busy_channel_time;
        return *this;
    }
};

inline std::optional<double> blocking_probability(const MetricsLedger& m) {
    if (m.new_arrivals == 0) return std::nullopt;
    return static_cast<double>(m.blocked_new) / static_cast<double>(m.new_arrivals);
}

// Forced terminations over successful (admitted) new calls.
inline std::optional<double> handover_failure_probability(const MetricsLedger& m) {
    if (m.admitted_new == 0) return std::nullopt;
    return static_cast<double>(m.forced_terminations) /
           static_cast<double>(m.admitted_new);
}

inline std::optional<double> access_probability(const MetricsLedger& m) {
    if (m.handover_requests == 0) return std::nullopt;
    return static_cast<double>(m.handover_successes) /
           static_cast<double>(m.handover_requests);
}

inline double empirical_handover_rate(const MetricsLedger& m) {
    if (m.clock_horizon <= 0.0) {
        throw std::logic_error("empirical_handover_rate: no observed time");
    }
    return static_cast<double>(m.handover_requests) / m.clock_horizon;
}

// Time-averaged occupied channels over both cells, in Erlangs.
inline double carried_traffic_erlangs(const MetricsLedger& m) {
    if (m.clock_horizon <= 0.0) return 0.0;
    return m.busy_channel_time / m.clock_horizon;
}

struct Interval {
    double mean = 0.0;
    double half_width = 0.0;
};

// Student-t interval over independent replication samples.
inline std::optional<Interval> confidence_interval(std::span<const double> samples,
                                                   double level = 0.95) {
    const std::size_t n = samples.size();
    if (n < 2) return std::nullopt;
    double mean = 0.0;
    for (double x : samples) mean += x;
    mean /= static_cast<double>(n);
    double ss = 0.0;
    for (double x : samples) ss += (x - mean) * (x - mean);
    const double var = ss / static_cast<double>(n - 1);
    const double se = std::sqrt(var / static_cast<double>(n));
    boost::math::students_t dist(static_cast<double>(n - 1));
    const double t = boost::math::quantile(dist, 0.5 + level / 2.0);
    return Interval{mean, t * se};
}

} // namespace crhx
