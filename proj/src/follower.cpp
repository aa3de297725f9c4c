#include "freshlink/follower.hpp"

#include <algorithm>
#include <stdexcept>

namespace freshlink {

UpdateQueue UpdateQueue::lifo() { return UpdateQueue(QueueDiscipline::Lifo1, Duration{}, 1); }

UpdateQueue UpdateQueue::fifo(Duration interval, std::size_t capacity) {
    if (capacity == 0)
        throw std::invalid_argument("UpdateQueue::fifo: zero capacity");
    return UpdateQueue(QueueDiscipline::FifoRc, interval, capacity);
}

bool UpdateQueue::offer(SensorUpdate update, Timestamp now) {
    if (update.gen_ts > now)
        throw std::invalid_argument("UpdateQueue::offer: future-dated update");
    std::lock_guard lock(mutex_);
    if (discipline_ == QueueDiscipline::Lifo1) {
        buffer_.clear();
        buffer_.push_back(std::move(update));
        return true;
    }
    if (last_accept_ && now < *last_accept_ + interval_)
        return false;
    if (buffer_.size() >= capacity_)
        return false;
    buffer_.push_back(std::move(update));
    last_accept_ = now;
    return true;
}

std::optional<SensorUpdate> UpdateQueue::take() {
    std::lock_guard lock(mutex_);
    if (buffer_.empty())
        return std::nullopt;
    SensorUpdate u = std::move(buffer_.front());
    buffer_.pop_front();
    return u;
}

std::size_t UpdateQueue::size() const {
    std::lock_guard lock(mutex_);
    return buffer_.size();
}

std::vector<Fragment> fragment_update(const SensorUpdate& update, std::size_t max_payload) {
    if (max_payload == 0)
        throw std::invalid_argument("fragment_update: max_payload must be >= 1");
    std::size_t len = update.payload.size();
    std::size_t count = std::max<std::size_t>(1, (len + max_payload - 1) / max_payload);
    if (count > 65535)
        throw std::length_error("fragment_update: too many fragments");
    std::vector<Fragment> out;
    out.reserve(count);
    for (std::size_t k = 0; k < count; ++k) {
        std::size_t lo = k * max_payload;
        std::size_t hi = std::min(lo + max_payload, len);
        Fragment f;
        f.update_seq = update.update_seq;
        f.frag_index = static_cast<std::uint16_t>(k);
        f.frag_count = static_cast<std::uint16_t>(count);
        f.gen_ts = update.gen_ts;
        f.payload.assign(update.payload.begin() + static_cast<std::ptrdiff_t>(lo),
                         update.payload.begin() + static_cast<std::ptrdiff_t>(hi));
        out.push_back(std::move(f));
    }
    return out;
}

bool ControlStore::apply(const std::vector<wire::Waypoint>& waypoints, Timestamp control_ts) {
    if (control_ts <= last_control_ts_)
        return false;
    waypoints_ = waypoints;
    last_control_ts_ = control_ts;
    return true;
}

FollowerMiddleware::FollowerMiddleware(std::uint16_t id, FollowerConfig config)
    : id_(id),
      config_(config),
      queue_(config.queue == QueueDiscipline::Lifo1
                 ? UpdateQueue::lifo()
                 : UpdateQueue::fifo(config.fifo_interval, config.fifo_capacity)) {}

bool FollowerMiddleware::offer_update(std::vector<std::uint8_t> payload, Timestamp gen_ts,
                                      Timestamp now) {
    SensorUpdate u;
    u.gen_ts = gen_ts;
    u.update_seq = next_seq_++;
    u.payload = std::move(payload);
    return queue_.offer(std::move(u), now);
}

std::optional<wire::FragPacket> FollowerMiddleware::handle_poll(const wire::PollPacket& poll,
                                                                Timestamp now) {
    if (poll.target != id_)
        return std::nullopt;

    // Cumulative ack: drop every fragment the leader has confirmed.
    if (poll.ack) {
        while (!frag_queue_.empty() &&
               poll.ack->covers(frag_queue_.front().update_seq, frag_queue_.front().frag_index))
            frag_queue_.pop_front();
    }

    // Control broadcast piggybacks on every poll; the entry's first waypoint
    // time orders broadcasts (the wire layout carries no separate control
    // timestamp).
    for (const auto& entry : poll.control) {
        if (entry.follower_id == id_ && !entry.waypoints.empty())
            control_.apply(entry.waypoints, Timestamp{entry.waypoints.front().t_us});
    }

    if (frag_queue_.empty()) {
        if (auto update = queue_.take()) {
            auto frags = fragment_update(*update, config_.max_payload);
            frag_queue_.insert(frag_queue_.end(), std::make_move_iterator(frags.begin()),
                               std::make_move_iterator(frags.end()));
        }
    }

    wire::FragPacket out;
    if (frag_queue_.empty()) {
        // NoData keeps the poll answered so the leader records a link
        // success rather than a timeout.
        out.update_seq = 0;
        out.frag_index = 0;
        out.frag_count = 0;
        out.gen_ts_us = now.micros;
        return out;
    }
    const Fragment& head = frag_queue_.front();
    out.update_seq = head.update_seq;
    out.frag_index = head.frag_index;
    out.frag_count = head.frag_count;
    out.gen_ts_us = head.gen_ts.micros;
    out.payload = head.payload;
    return out;
}

wire::SyncRespPacket FollowerMiddleware::handle_sync(const wire::SyncReqPacket& req,
                                                     Timestamp now) const {
    wire::SyncRespPacket resp;
    resp.t1_us = req.t1_us;
    resp.t2_us = now.micros;
    resp.t3_us = now.micros;
    return resp;
}

}  // namespace freshlink
