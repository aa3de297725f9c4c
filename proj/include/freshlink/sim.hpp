#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <optional>
#include <queue>
#include <random>
#include <utility>
#include <vector>

#include "freshlink/follower.hpp"
#include "freshlink/metrics.hpp"
#include "freshlink/observation.hpp"
#include "freshlink/scheduler.hpp"
#include "freshlink/time.hpp"
#include "freshlink/transport.hpp"

namespace freshlink {

enum class Scenario { PlainTelemetry, MobilityTracking };

struct SimConfig {
    std::uint64_t seed{1};
    double duration_s{30.0};
    std::size_t n{2};

    // channel
    double loss{0.0};
    std::vector<double> per_link_loss;  // optional, one entry per follower
    double latency_s{0.005};
    double bitrate_bps{20e6};
    double turnaround_s{0.001};
    std::vector<double> clock_offset_s;  // optional follower clock skews

    // traffic
    double gen_fps{50.0};   // sensor generation rate
    double rate_fps{0.0};   // FIFO admission rate; 0 = uncontrolled
    std::size_t payload_bytes{25000};
    std::size_t max_payload{1400};
    QueueDiscipline queue{QueueDiscipline::Lifo1};
    std::size_t capacity{16};

    // leader
    PolicyKind policy{PolicyKind::Whittle};
    double timeout_s{0.3};
    std::size_t window{10};
    double p_floor{0.05};
    double sync_period_s{120.0};
    bool sync_enabled{true};
    bool sticky_update{false};

    // scenario
    Scenario scenario{Scenario::PlainTelemetry};
    double target_speed_max{1.0};
    double resample_period_s{2.0};
    double pause_prob{0.2};
    double fov_radius{30.0};
    double agent_speed_max{2.0};
    double waypoint_horizon_s{2.0};
    std::size_t waypoint_count{4};
    bool control_enabled{true};
    double arena_w{20.0};
    double arena_h{10.0};
    double error_sample_s{0.01};

    // random-access baseline
    double slot_s{0.005};
    double txprob{0.25};

    /// Throws std::invalid_argument naming the offending field.
    void validate() const;
    double link_loss(std::size_t follower_index) const;
};

/// Deterministic discrete-event core; also the virtual clock.
class EventCore : public Clock {
  public:
    Timestamp now() override { return now_; }
    void schedule(Timestamp at, std::function<void()> fn);
    std::optional<Timestamp> next_time() const;
    /// Runs the earliest event, advancing the clock to it.
    void run_next();
    void advance_to(Timestamp t);

  private:
    struct Event {
        Timestamp at;
        std::uint64_t seq;
        std::function<void()> fn;
        bool operator>(const Event& o) const {
            return at != o.at ? at > o.at : seq > o.seq;
        }
    };
    std::priority_queue<Event, std::vector<Event>, std::greater<>> queue_;
    Timestamp now_{};
    std::uint64_t seq_{0};
};

/// Loss-only simulated datagram network. Node 0 is the leader; followers are
/// nodes 1..N. Per-link delivery order is FIFO; datagrams are never
/// corrupted or reordered within a link.
class SimNet {
  public:
    SimNet(EventCore& core, const SimConfig& config, std::uint64_t rng_stream);

    using Handler = std::function<void(const Datagram&)>;
    void set_handler(std::uint16_t node, Handler handler);
    void send(std::uint16_t from, std::uint16_t to, std::vector<std::uint8_t> bytes);

    std::uint64_t sent() const { return sent_; }
    std::uint64_t delivered() const { return delivered_; }

  private:
    EventCore& core_;
    const SimConfig& config_;
    std::mt19937_64 rng_;
    std::vector<Handler> handlers_;
    std::map<std::pair<std::uint16_t, std::uint16_t>, Timestamp> last_arrival_;
    std::uint64_t sent_{0};
    std::uint64_t delivered_{0};
};

/// The leader's endpoint on a SimNet.
class SimTransport : public Transport {
  public:
    SimTransport(EventCore& core, SimNet& net);
    void send(const Endpoint& to, std::span<const std::uint8_t> bytes) override;
    std::optional<Datagram> recv(Timestamp deadline) override;

  private:
    EventCore& core_;
    SimNet& net_;
    std::deque<Datagram> inbox_;
};

// --- mobility-tracking scenario pieces ---

struct TargetParams {
    double speed_max{1.0};
    double resample_period_s{2.0};
    double pause_prob{0.2};
    double arena_w{20.0};
    double arena_h{10.0};
};

struct TargetModel {
    double x{0.0}, y{0.0};
    double vx{0.0}, vy{0.0};
    bool paused{false};
    double until_resample_s{0.0};  // counts down to the next resample epoch
};

/// Advances the target by dt: position integrates velocity (zero while
/// paused), and at each resample epoch the speed is drawn uniform on
/// [0, max], the heading uniform on [0, 2pi), with the configured pause
/// probability for one resample period. Position reflects off arena walls.
void step_target(TargetModel& target, Duration dt, std::mt19937_64& rng,
                 const TargetParams& params);

struct AgentModel {
    double x{0.0}, y{0.0};
};

/// Moves toward the first waypoint whose time is >= now at speed
/// min(max_speed, distance/remaining); a behind-schedule waypoint is chased
/// at max speed; no waypoints means hold position.
void step_follower_agent(AgentModel& agent, const std::vector<wire::Waypoint>& waypoints,
                         Timestamp now, Duration dt, double max_speed);

/// Closed-ball field-of-view membership.
Observation observe(const AgentModel& agent, const TargetModel& target, double fov_radius);

/// Full middleware (leader + followers) over simulated channels.
MetricsReport run_polling_sim(const SimConfig& config);

/// Slotted random-access FIFO proxy for the distributed-contention baseline.
MetricsReport run_random_access_baseline(const SimConfig& config);

}  // namespace freshlink
