#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include "freshlink/aoi.hpp"
#include "freshlink/follower.hpp"
#include "freshlink/observation.hpp"
#include "freshlink/scheduler.hpp"
#include "freshlink/time.hpp"
#include "freshlink/transport.hpp"
#include "freshlink/wire.hpp"

namespace freshlink {

struct LeaderConfig {
    Duration timeout = Duration::from_millis(300);
    std::size_t window = 10;
    double p_floor = 0.05;
    PolicyKind policy = PolicyKind::Whittle;
    std::uint64_t policy_seed = 0;
    double weight_alpha = 0.8;
    double weight_floor = 0.05;
    Duration sync_period = Duration::from_seconds(120);
    bool sync_enabled = true;
    int sync_retries = 3;
    /// Keep polling the same follower until its in-flight update completes.
    bool sticky_update = false;
};

/// Application hook invoked on every completed update.
struct ProcessResult {
    bool has_waypoints{false};
    std::vector<wire::Waypoint> waypoints;
    bool has_weight{false};
    double v_hat{0.0};
};

class UpdateProcessor {
  public:
    virtual ~UpdateProcessor() = default;
    /// gen_ts is already corrected into the leader's clock domain.
    virtual ProcessResult process(std::uint16_t follower_id, const SensorUpdate& update,
                                  Timestamp now) = 0;
};

/// Linear-extrapolation mobility tracker: from the two most recent found
/// observations it derives the target velocity, a waypoint list spaced
/// horizon/count apart, and the target/agent relative speed used as the
/// scheduling weight observation.
class TrackingProcessor : public UpdateProcessor {
  public:
    TrackingProcessor(Duration waypoint_horizon, std::size_t waypoint_count);

    ProcessResult process(std::uint16_t follower_id, const SensorUpdate& update,
                          Timestamp now) override;

  private:
    struct History {
        bool has_cur{false}, has_prev{false};
        double cur_x{0}, cur_y{0}, prev_x{0}, prev_y{0};
        Timestamp cur_t, prev_t;
        bool has_agent_prev{false};
        double agent_x{0}, agent_y{0};
        Timestamp agent_t;
        double agent_vx{0}, agent_vy{0};
    };
    Duration horizon_;
    std::size_t count_;
    std::map<std::uint16_t, History> history_;
};

/// One fragment-reassembly buffer; a newer update_seq discards an incomplete
/// older one.
struct Reassembly {
    std::uint32_t update_seq{0};
    std::uint16_t frag_count{0};
    Timestamp gen_ts;  // follower clock, uncorrected
    std::map<std::uint16_t, std::vector<std::uint8_t>> received;
};

struct FollowerEntry {
    std::uint16_t id{0};
    Endpoint address;
    AgeRecord age;
    LinkEstimator link;
    WeightEstimator weight;
    std::optional<Reassembly> reassembly;
    Duration clock_offset{};  // follower clock minus leader clock
    bool eligible{true};
    std::optional<wire::FragmentAck> last_ack;
    std::vector<wire::Waypoint> waypoints;
    Timestamp next_sync;
    AoiTrace trace;
    std::uint64_t protocol_faults{0};
    std::uint64_t polls{0};
    std::uint64_t successes{0};
    std::uint64_t failures{0};
};

struct LeaderStats {
    std::uint64_t polls{0};
    std::uint64_t responses{0};
    std::uint64_t timeouts{0};
    std::uint64_t late_fragments{0};
    std::uint64_t decode_errors{0};
    std::uint64_t sync_failures{0};
    std::uint64_t protocol_faults{0};
};

/// Centralized polling leader: one sequential send -> await -> update loop.
class Leader {
  public:
    Leader(Clock& clock, Transport& transport, LeaderConfig config,
           UpdateProcessor* processor = nullptr);

    /// Registers a follower (AoI starts at zero from this instant) and, when
    /// sync is enabled, performs an initial clock-sync exchange.
    void register_follower(std::uint16_t id, Endpoint address);

    /// Runs decision epochs until the given instant.
    void run_until(Timestamp end);
    /// One decision epoch: due syncs, policy selection, poll, await.
    void step();

    const LeaderStats& stats() const { return stats_; }
    const std::map<std::uint16_t, FollowerEntry>& followers() const { return entries_; }
    MetricsAccumulator& metrics() { return metrics_; }
    /// Closes all traces and the accumulator at the given instant.
    void finish(Timestamp end);

    /// Exposed for tests: processes one fragment from a registered follower,
    /// returning the completed update when reassembly finishes.
    std::optional<SensorUpdate> on_fragment(FollowerEntry& entry, const wire::FragPacket& frag,
                                            Timestamp now);
    void on_timeout(FollowerEntry& entry);

  private:
    wire::PollPacket build_poll(const FollowerEntry& target);
    std::optional<std::uint16_t> pick_target(Timestamp now);
    bool sync_follower(FollowerEntry& entry);
    void handle_completed(FollowerEntry& entry, const SensorUpdate& update, Timestamp now);

    Clock& clock_;
    Transport& transport_;
    LeaderConfig config_;
    UpdateProcessor* processor_;
    Policy policy_;
    std::map<std::uint16_t, FollowerEntry> entries_;
    std::map<Endpoint, std::uint16_t> by_address_;
    MetricsAccumulator metrics_;
    LeaderStats stats_;
    std::uint32_t next_poll_seq_{1};
    std::optional<std::uint16_t> sticky_target_;
    bool finished_{false};
};

/// One two-way offset exchange: sends t1, expects (t1, t2, t3) back and
/// computes ((t2-t1)+(t3-t4))/2, the follower-minus-leader offset under
/// symmetric delays. Retries up to `retries` times; nullopt when every
/// attempt times out.
std::optional<Duration> sync_clock(Clock& clock, Transport& transport, const Endpoint& follower,
                                   Duration per_try_timeout = Duration::from_millis(300),
                                   int retries = 3);

}  // namespace freshlink
