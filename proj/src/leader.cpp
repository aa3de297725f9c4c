#include "freshlink/leader.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace freshlink {

TrackingProcessor::TrackingProcessor(Duration waypoint_horizon, std::size_t waypoint_count)
    : horizon_(waypoint_horizon), count_(waypoint_count) {
    if (count_ == 0 || horizon_.micros <= 0)
        throw std::invalid_argument("TrackingProcessor: bad waypoint parameters");
}

ProcessResult TrackingProcessor::process(std::uint16_t follower_id, const SensorUpdate& update,
                                         Timestamp) {
    ProcessResult result;
    auto obs = decode_observation(update.payload);
    if (!obs)
        return result;

    History& h = history_[follower_id];

    // Agent velocity from successive self-positions (found or not).
    if (h.has_agent_prev && update.gen_ts > h.agent_t) {
        double dt = (update.gen_ts - h.agent_t).seconds();
        h.agent_vx = (obs->agent_x - h.agent_x) / dt;
        h.agent_vy = (obs->agent_y - h.agent_y) / dt;
    }
    h.agent_x = obs->agent_x;
    h.agent_y = obs->agent_y;
    h.agent_t = update.gen_ts;
    h.has_agent_prev = true;

    if (!obs->found)
        return result;  // waypoints unchanged

    if (h.has_cur) {
        h.prev_x = h.cur_x;
        h.prev_y = h.cur_y;
        h.prev_t = h.cur_t;
        h.has_prev = true;
    }
    h.cur_x = obs->target_x;
    h.cur_y = obs->target_y;
    h.cur_t = update.gen_ts;
    h.has_cur = true;

    if (!h.has_prev)
        return result;  // cold start: one observation is not a velocity
    if (h.cur_t == h.prev_t)
        return result;  // division guard

    double dt = (h.cur_t - h.prev_t).seconds();
    double vx = (h.cur_x - h.prev_x) / dt;
    double vy = (h.cur_y - h.prev_y) / dt;

    Duration delta = Duration::from_micros(horizon_.micros / static_cast<std::int64_t>(count_));
    result.has_waypoints = true;
    for (std::size_t k = 1; k <= count_; ++k) {
        wire::Waypoint wp;
        double ahead = delta.seconds() * static_cast<double>(k);
        wp.t_us = (h.cur_t + Duration::from_micros(delta.micros * static_cast<std::int64_t>(k)))
                      .micros;
        wp.x = h.cur_x + vx * ahead;
        wp.y = h.cur_y + vy * ahead;
        wp.z = 0.0;
        result.waypoints.push_back(wp);
    }
    result.has_weight = true;
    result.v_hat = std::hypot(vx - h.agent_vx, vy - h.agent_vy);
    return result;
}

std::optional<Duration> sync_clock(Clock& clock, Transport& transport, const Endpoint& follower,
                                   Duration per_try_timeout, int retries) {
    for (int attempt = 0; attempt < retries; ++attempt) {
        Timestamp t1 = clock.now();
        wire::Packet req{0, wire::SyncReqPacket{t1.micros}};
        auto bytes = wire::encode(req);
        transport.send(follower, bytes);
        Timestamp deadline = t1 + per_try_timeout;
        while (auto dg = transport.recv(deadline)) {
            auto decoded = wire::decode(dg->bytes);
            auto* packet = std::get_if<wire::Packet>(&decoded);
            if (packet == nullptr)
                continue;
            const auto* resp = std::get_if<wire::SyncRespPacket>(&packet->body);
            if (resp == nullptr || resp->t1_us != t1.micros || dg->from != follower)
                continue;
            Timestamp t4 = clock.now();
            std::int64_t offset =
                ((resp->t2_us - t1.micros) + (resp->t3_us - t4.micros)) / 2;
            return Duration{offset};
        }
    }
    return std::nullopt;
}

Leader::Leader(Clock& clock, Transport& transport, LeaderConfig config,
               UpdateProcessor* processor)
    : clock_(clock),
      transport_(transport),
      config_(config),
      processor_(processor),
      policy_(config.policy, config.policy_seed) {}

void Leader::register_follower(std::uint16_t id, Endpoint address) {
    Timestamp now = clock_.now();
    FollowerEntry entry{.id = id,
                        .address = address,
                        .age = AgeRecord{id, now, now},
                        .link = LinkEstimator(config_.window, config_.p_floor),
                        .weight = WeightEstimator(config_.weight_alpha, 1.0)};
    entry.next_sync = now;  // first sync due immediately
    entry.trace.begin(now, 0.0);
    auto [it, inserted] = entries_.emplace(id, std::move(entry));
    if (!inserted)
        throw std::invalid_argument("register_follower: duplicate id");
    by_address_[address] = id;
    metrics_.register_follower(id, now, it->second.weight.value());
    if (config_.sync_enabled)
        sync_follower(it->second);
}

bool Leader::sync_follower(FollowerEntry& entry) {
    entry.eligible = false;  // no polling mid-exchange
    auto offset = sync_clock(clock_, transport_, entry.address, config_.timeout,
                             config_.sync_retries);
    entry.eligible = true;
    entry.next_sync = clock_.now() + config_.sync_period;
    if (!offset) {
        ++stats_.sync_failures;
        return false;  // keep the previous offset
    }
    entry.clock_offset = *offset;
    return true;
}

wire::PollPacket Leader::build_poll(const FollowerEntry& target) {
    wire::PollPacket poll;
    poll.poll_seq = next_poll_seq_++;
    poll.target = target.id;
    poll.ack = target.last_ack;
    for (const auto& [id, entry] : entries_) {
        if (entry.waypoints.empty())
            continue;
        poll.control.push_back({id, entry.waypoints});
    }
    return poll;
}

std::optional<std::uint16_t> Leader::pick_target(Timestamp now) {
    if (entries_.empty())
        return std::nullopt;
    if (config_.sticky_update && sticky_target_) {
        auto it = entries_.find(*sticky_target_);
        if (it != entries_.end() && it->second.reassembly)
            return *sticky_target_;
        sticky_target_.reset();
    }
    SchedulerView view;
    for (const auto& [id, entry] : entries_) {
        FollowerView f;
        f.id = id;
        f.age_s = age_at(entry.age, now).seconds();
        f.reliability = entry.link.estimate();
        // Floored like the link estimate: a well-tracked follower's observed
        // relative speed decays toward zero, and a zero weight would starve it
        // permanently under the index policy.
        f.weight = std::max(entry.weight.value(), config_.weight_floor);
        f.eligible = entry.eligible;
        view.followers.push_back(f);
    }
    return policy_.select(view);
}

std::optional<SensorUpdate> Leader::on_fragment(FollowerEntry& entry,
                                                const wire::FragPacket& frag, Timestamp now) {
    entry.link.record(true);
    ++entry.successes;
    if (frag.is_nodata())
        return std::nullopt;

    if (!entry.last_ack || !entry.last_ack->covers(frag.update_seq, frag.frag_index))
        entry.last_ack = wire::FragmentAck{frag.update_seq, frag.frag_index};

    if (entry.reassembly && entry.reassembly->update_seq == frag.update_seq &&
        entry.reassembly->frag_count != frag.frag_count) {
        // Inconsistent fragmentation within one update: protocol fault.
        ++entry.protocol_faults;
        ++stats_.protocol_faults;
        entry.reassembly.reset();
    }
    if (entry.reassembly && entry.reassembly->update_seq > frag.update_seq)
        return std::nullopt;  // stale fragment of an abandoned update
    if (!entry.reassembly || entry.reassembly->update_seq < frag.update_seq) {
        entry.reassembly = Reassembly{frag.update_seq, frag.frag_count,
                                      Timestamp{frag.gen_ts_us}, {}};
    }
    Reassembly& buf = *entry.reassembly;
    if (frag.frag_index >= buf.frag_count) {
        ++entry.protocol_faults;
        ++stats_.protocol_faults;
        entry.reassembly.reset();
        return std::nullopt;
    }
    buf.received.emplace(frag.frag_index, frag.payload);  // duplicates ignored
    if (buf.received.size() < buf.frag_count)
        return std::nullopt;

    SensorUpdate update;
    update.update_seq = buf.update_seq;
    for (auto& [index, payload] : buf.received)
        update.payload.insert(update.payload.end(), payload.begin(), payload.end());
    // Correct the generation timestamp into the leader's clock domain;
    // applied exactly once, here.
    update.gen_ts = buf.gen_ts - entry.clock_offset;
    entry.reassembly.reset();
    if (sticky_target_ && *sticky_target_ == entry.id)
        sticky_target_.reset();

    if (update.gen_ts > now) {
        // Residual sync error put the update in the future; clamp.
        ++entry.protocol_faults;
        ++stats_.protocol_faults;
        update.gen_ts = now;
    }
    handle_completed(entry, update, now);
    return update;
}

void Leader::handle_completed(FollowerEntry& entry, const SensorUpdate& update, Timestamp now) {
    Duration age = record_delivery(entry.age, update.gen_ts, now);
    entry.trace.on_delivery(now, age.seconds());
    metrics_.record_delivery(entry.id, age.seconds(), update.payload.size(), now);
    if (processor_ != nullptr) {
        ProcessResult result = processor_->process(entry.id, update, now);
        if (result.has_waypoints)
            entry.waypoints = std::move(result.waypoints);
        if (result.has_weight) {
            entry.weight.observe(result.v_hat);
            metrics_.set_weight(entry.id, entry.weight.value(), now);
        }
    }
}

void Leader::on_timeout(FollowerEntry& entry) {
    entry.link.record(false);
    ++entry.failures;
}

void Leader::step() {
    Timestamp now = clock_.now();
    if (config_.sync_enabled) {
        for (auto& [id, entry] : entries_)
            if (now >= entry.next_sync)
                sync_follower(entry);
        now = clock_.now();
    }
    auto target_id = pick_target(now);
    if (!target_id)
        return;  // idle: nothing registered
    FollowerEntry& target = entries_.at(*target_id);
    if (config_.sticky_update)
        sticky_target_ = *target_id;

    auto poll = build_poll(target);
    auto bytes = wire::encode(wire::Packet{0, poll});
    transport_.send(target.address, bytes);
    ++stats_.polls;
    ++target.polls;

    Timestamp deadline = now + config_.timeout;
    bool answered = false;
    while (auto dg = transport_.recv(deadline)) {
        auto decoded = wire::decode(dg->bytes);
        auto* packet = std::get_if<wire::Packet>(&decoded);
        if (packet == nullptr) {
            ++stats_.decode_errors;
            continue;
        }
        const auto* frag = std::get_if<wire::FragPacket>(&packet->body);
        if (frag == nullptr)
            continue;  // unexpected control traffic; ignore
        auto it = by_address_.find(dg->from);
        if (it == by_address_.end())
            continue;  // unregistered source
        FollowerEntry& from_entry = entries_.at(it->second);
        on_fragment(from_entry, *frag, clock_.now());
        if (from_entry.id == target.id) {
            answered = true;
            ++stats_.responses;
            break;
        }
        ++stats_.late_fragments;
    }
    if (!answered) {
        on_timeout(target);
        ++stats_.timeouts;
    }
    metrics_.advance_to(clock_.now());
}

void Leader::run_until(Timestamp end) {
    if (entries_.empty())
        throw std::logic_error("Leader::run_until: no registered followers");
    while (clock_.now() < end)
        step();
}

void Leader::finish(Timestamp end) {
    if (finished_)
        return;
    finished_ = true;
    metrics_.advance_to(end);
    for (auto& [id, entry] : entries_)
        entry.trace.finish(end);
}

}  // namespace freshlink
