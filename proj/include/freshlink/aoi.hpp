#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include "freshlink/time.hpp"

namespace freshlink {

/// Per-follower freshness state: the largest delivered generation timestamp
/// tau and the instant the follower was registered (tau starts there, so age
/// starts at zero and grows until the first delivery).
struct AgeRecord {
    std::uint16_t follower_id{0};
    Timestamp tau;
    Timestamp registered_at;
};

/// Current age A(t) = now - tau. Throws std::invalid_argument if now < tau
/// (clock misuse).
Duration age_at(const AgeRecord& record, Timestamp now);

/// Applies a delivery with generation timestamp gen_ts observed at `now`.
/// tau becomes max(tau, gen_ts); the returned age is now - tau'. Stale and
/// duplicate deliveries leave tau unchanged. Throws std::invalid_argument if
/// gen_ts > now (future-dated update, clock-sync fault).
Duration record_delivery(AgeRecord& record, Timestamp gen_ts, Timestamp now);

/// Piecewise-linear AoI trajectory. Between breakpoints the age grows with
/// slope exactly 1 s/s; each delivery appends a breakpoint holding the
/// post-delivery age.
class AoiTrace {
  public:
    struct Breakpoint {
        Timestamp at;
        double age_s;
    };

    void begin(Timestamp t0, double age0_s = 0.0);
    /// Records a delivery dropping the age to new_age_s at time t.
    /// Timestamps must be non-decreasing; a second delivery at the same
    /// instant keeps the fresher (smaller) age.
    void on_delivery(Timestamp t, double new_age_s);
    /// Closes the trace with a terminal breakpoint at t1.
    void finish(Timestamp t1);

    bool empty() const { return breakpoints_.empty(); }
    Timestamp start() const { return breakpoints_.front().at; }
    Timestamp end() const { return breakpoints_.back().at; }
    const std::vector<Breakpoint>& breakpoints() const { return breakpoints_; }

    /// Age at an instant inside the covered span.
    double age_at(Timestamp t) const;

    /// Exact sawtooth integral over [t0, t1] in s^2. Throws if the trace
    /// does not cover the interval.
    double integrate(Timestamp t0, Timestamp t1) const;

    /// Samples the trace on a uniform grid of the given step and returns the
    /// smallest sampled age v such that at least a fraction q of samples are
    /// <= v. q in (0,1), step > 0.
    double percentile(double q, Duration sample_step) const;

  private:
    std::vector<Breakpoint> breakpoints_;
    bool finished_{false};
};

/// Accumulates the empirical weighted-age integral, delivery counts and
/// delivered bytes per follower. Weights are piecewise-constant between
/// set_weight calls. Single-owner mutation; not internally locked.
class MetricsAccumulator {
  public:
    struct FollowerTotals {
        double age_integral_s2{0.0};
        double weighted_integral_s2{0.0};
        std::uint64_t deliveries{0};
        std::uint64_t bytes{0};
    };

    void register_follower(std::uint16_t id, Timestamp now, double weight = 1.0);
    /// Integrates all followers' ages forward to `now`.
    void advance_to(Timestamp now);
    /// Advances to `now`, then drops the follower's age to new_age.
    void record_delivery(std::uint16_t id, double new_age_s, std::uint64_t bytes, Timestamp now);
    /// Advances to `now`, then switches the follower's weight.
    void set_weight(std::uint16_t id, double weight, Timestamp now);

    double elapsed_s() const { return elapsed_s_; }
    const FollowerTotals& totals(std::uint16_t id) const;
    const std::map<std::uint16_t, FollowerTotals>& all_totals() const { return totals_; }

  private:
    struct Live {
        double age_s{0.0};
        double weight{1.0};
    };
    std::map<std::uint16_t, FollowerTotals> totals_;
    std::map<std::uint16_t, Live> live_;
    Timestamp last_;
    bool started_{false};
    double elapsed_s_{0.0};
};

/// (1/T) * sum_i weighted age integral of i. Throws if no time has elapsed.
double weighted_cost(const MetricsAccumulator& acc);

}  // namespace freshlink
