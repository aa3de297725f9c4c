#pragma once

#include <cstdint>
#include <deque>
#include <mutex>
#include <optional>
#include <vector>

#include "freshlink/time.hpp"
#include "freshlink/wire.hpp"

namespace freshlink {

struct SensorUpdate {
    Timestamp gen_ts;
    std::uint32_t update_seq{0};
    std::vector<std::uint8_t> payload;
};

enum class QueueDiscipline { Lifo1, FifoRc };

/// Follower-side update buffer: single-slot LIFO (the freshest update wins)
/// or a rate-controlled FIFO that admits at most one update per interval up
/// to a capacity bound. Safe for one producer and one consumer.
class UpdateQueue {
  public:
    static UpdateQueue lifo();
    /// interval 0 disables rate control (admission limited by capacity only).
    static UpdateQueue fifo(Duration interval, std::size_t capacity);

    /// Returns true when the update was admitted. LIFO always admits
    /// (overwriting the slot); FIFO admits when the interval has elapsed
    /// since the last admission and the buffer has room.
    bool offer(SensorUpdate update, Timestamp now);
    std::optional<SensorUpdate> take();

    QueueDiscipline discipline() const { return discipline_; }
    std::size_t size() const;

  private:
    UpdateQueue(QueueDiscipline d, Duration interval, std::size_t capacity)
        : discipline_(d), interval_(interval), capacity_(capacity) {}

    QueueDiscipline discipline_;
    Duration interval_{};
    std::size_t capacity_{1};
    mutable std::mutex mutex_;
    std::deque<SensorUpdate> buffer_;  // LIFO uses at most one element
    std::optional<Timestamp> last_accept_;
};

struct Fragment {
    std::uint32_t update_seq{0};
    std::uint16_t frag_index{0};
    std::uint16_t frag_count{0};
    Timestamp gen_ts;
    std::vector<std::uint8_t> payload;
};

/// Splits an update into max_payload-sized pieces; a zero-length payload
/// still yields one empty fragment. Concatenating the pieces in index order
/// reproduces the payload.
std::vector<Fragment> fragment_update(const SensorUpdate& update, std::size_t max_payload);

/// Latest leader-issued waypoints, replaced only by strictly newer control.
class ControlStore {
  public:
    /// Returns true when the store was replaced (control_ts newer than the
    /// stored one).
    bool apply(const std::vector<wire::Waypoint>& waypoints, Timestamp control_ts);

    const std::vector<wire::Waypoint>& waypoints() const { return waypoints_; }
    Timestamp last_control_ts() const { return last_control_ts_; }

  private:
    std::vector<wire::Waypoint> waypoints_;
    Timestamp last_control_ts_{INT64_MIN};
};

struct FollowerConfig {
    QueueDiscipline queue{QueueDiscipline::Lifo1};
    Duration fifo_interval{};        // 0 = uncontrolled
    std::size_t fifo_capacity{16};
    std::size_t max_payload{1400};
};

/// Follower middleware: admits timestamped updates, serves polls one
/// fragment at a time with cumulative-ack retransmission, answers clock-sync
/// requests, and keeps the latest control information.
class FollowerMiddleware {
  public:
    FollowerMiddleware(std::uint16_t id, FollowerConfig config);

    std::uint16_t id() const { return id_; }

    /// Producer side: stamps the next update_seq and offers to the queue.
    bool offer_update(std::vector<std::uint8_t> payload, Timestamp gen_ts, Timestamp now);

    /// Responder side. Polls not addressed to this follower yield nullopt.
    /// Otherwise processes the poll's cumulative ack, pulls the next update
    /// into the fragment queue when it ran empty, applies the control blob,
    /// and returns the head fragment (a NoData fragment when idle). The same
    /// head is re-sent until acked.
    std::optional<wire::FragPacket> handle_poll(const wire::PollPacket& poll, Timestamp now);

    wire::SyncRespPacket handle_sync(const wire::SyncReqPacket& req, Timestamp now) const;

    const ControlStore& control() const { return control_; }
    std::size_t fragment_backlog() const { return frag_queue_.size(); }
    std::size_t queue_size() const { return queue_.size(); }

  private:
    std::uint16_t id_;
    FollowerConfig config_;
    UpdateQueue queue_;
    std::deque<Fragment> frag_queue_;
    ControlStore control_;
    std::uint32_t next_seq_{1};
};

}  // namespace freshlink
