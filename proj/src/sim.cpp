#include "freshlink/sim.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numbers>
#include <stdexcept>

#include "freshlink/leader.hpp"

namespace freshlink {

void SimConfig::validate() const {
    auto fail = [](const char* what) { throw std::invalid_argument(std::string("SimConfig: ") + what); };
    if (duration_s <= 0) fail("duration_s must be > 0");
    if (n < 1 || n > 60000) fail("n out of range");
    if (loss < 0 || loss >= 1) fail("loss outside [0,1)");
    if (!per_link_loss.empty() && per_link_loss.size() != n)
        fail("per_link_loss length != n");
    for (double p : per_link_loss)
        if (p < 0 || p >= 1) fail("per_link_loss entry outside [0,1)");
    if (!clock_offset_s.empty() && clock_offset_s.size() != n)
        fail("clock_offset_s length != n");
    if (latency_s < 0) fail("latency_s must be >= 0");
    if (bitrate_bps <= 0) fail("bitrate_bps must be > 0");
    if (turnaround_s < 0) fail("turnaround_s must be >= 0");
    if (gen_fps <= 0) fail("gen_fps must be > 0");
    if (rate_fps < 0) fail("rate_fps must be >= 0");
    if (payload_bytes < 1) fail("payload_bytes must be >= 1");
    if (max_payload < 1) fail("max_payload must be >= 1");
    if (capacity < 1) fail("capacity must be >= 1");
    if (timeout_s <= 0) fail("timeout_s must be > 0");
    if (window < 1) fail("window must be >= 1");
    if (p_floor <= 0 || p_floor > 1) fail("p_floor outside (0,1]");
    if (sync_period_s <= 0) fail("sync_period_s must be > 0");
    if (target_speed_max < 0) fail("target_speed_max must be >= 0");
    if (resample_period_s <= 0) fail("resample_period_s must be > 0");
    if (pause_prob < 0 || pause_prob > 1) fail("pause_prob outside [0,1]");
    if (fov_radius < 0) fail("fov_radius must be >= 0");
    if (agent_speed_max < 0) fail("agent_speed_max must be >= 0");
    if (waypoint_horizon_s <= 0) fail("waypoint_horizon_s must be > 0");
    if (waypoint_count < 1) fail("waypoint_count must be >= 1");
    if (arena_w <= 0 || arena_h <= 0) fail("arena must be positive");
    if (error_sample_s <= 0) fail("error_sample_s must be > 0");
    if (slot_s <= 0) fail("slot_s must be > 0");
    if (txprob < 0 || txprob > 1) fail("txprob outside [0,1]");
}

double SimConfig::link_loss(std::size_t follower_index) const {
    if (!per_link_loss.empty())
        return per_link_loss.at(follower_index);
    return loss;
}

void EventCore::schedule(Timestamp at, std::function<void()> fn) {
    if (at < now_)
        throw std::invalid_argument("EventCore: scheduling in the past");
    queue_.push(Event{at, seq_++, std::move(fn)});
}

std::optional<Timestamp> EventCore::next_time() const {
    if (queue_.empty())
        return std::nullopt;
    return queue_.top().at;
}

void EventCore::run_next() {
    if (queue_.empty())
        throw std::logic_error("EventCore: no events");
    Event ev = queue_.top();
    queue_.pop();
    now_ = ev.at;
    ev.fn();
}

void EventCore::advance_to(Timestamp t) {
    if (t > now_)
        now_ = t;
}

SimNet::SimNet(EventCore& core, const SimConfig& config, std::uint64_t rng_stream)
    : core_(core), config_(config), rng_(rng_stream), handlers_(config.n + 1) {}

void SimNet::set_handler(std::uint16_t node, Handler handler) {
    handlers_.at(node) = std::move(handler);
}

void SimNet::send(std::uint16_t from, std::uint16_t to, std::vector<std::uint8_t> bytes) {
    ++sent_;
    std::size_t link = (from == 0 ? to : from) - 1;  // follower index of the link
    std::uniform_real_distribution<double> u(0.0, 1.0);
    if (u(rng_) < config_.link_loss(link))
        return;
    double tx_s = static_cast<double>(bytes.size()) * 8.0 / config_.bitrate_bps;
    Timestamp arrival = core_.now() + Duration::from_seconds(config_.latency_s + tx_s);
    auto key = std::make_pair(from, to);
    auto it = last_arrival_.find(key);
    if (it != last_arrival_.end() && arrival < it->second)
        arrival = it->second;  // FIFO link
    last_arrival_[key] = arrival;
    ++delivered_;
    core_.schedule(arrival, [this, from, to, b = std::move(bytes)]() {
        if (handlers_.at(to))
            handlers_.at(to)(Datagram{Endpoint{from, 0}, b});
    });
}

SimTransport::SimTransport(EventCore& core, SimNet& net) : core_(core), net_(net) {
    net_.set_handler(0, [this](const Datagram& dg) { inbox_.push_back(dg); });
}

void SimTransport::send(const Endpoint& to, std::span<const std::uint8_t> bytes) {
    net_.send(0, static_cast<std::uint16_t>(to.host),
              std::vector<std::uint8_t>(bytes.begin(), bytes.end()));
}

std::optional<Datagram> SimTransport::recv(Timestamp deadline) {
    for (;;) {
        if (!inbox_.empty()) {
            Datagram dg = std::move(inbox_.front());
            inbox_.pop_front();
            return dg;
        }
        auto next = core_.next_time();
        if (!next || *next > deadline) {
            core_.advance_to(deadline);
            return std::nullopt;
        }
        core_.run_next();
    }
}

void step_target(TargetModel& target, Duration dt, std::mt19937_64& rng,
                 const TargetParams& params) {
    if (dt.micros <= 0)
        throw std::invalid_argument("step_target: dt must be > 0");
    double dts = dt.seconds();
    if (!target.paused) {
        target.x += target.vx * dts;
        target.y += target.vy * dts;
        // reflect off arena walls
        if (target.x < 0) { target.x = -target.x; target.vx = -target.vx; }
        if (target.x > params.arena_w) { target.x = 2 * params.arena_w - target.x; target.vx = -target.vx; }
        if (target.y < 0) { target.y = -target.y; target.vy = -target.vy; }
        if (target.y > params.arena_h) { target.y = 2 * params.arena_h - target.y; target.vy = -target.vy; }
    }
    target.until_resample_s -= dts;
    if (target.until_resample_s <= 0.0) {
        target.until_resample_s += params.resample_period_s;
        std::uniform_real_distribution<double> uspeed(0.0, params.speed_max);
        std::uniform_real_distribution<double> uheading(0.0, 2.0 * std::numbers::pi);
        std::uniform_real_distribution<double> upause(0.0, 1.0);
        double speed = uspeed(rng);
        double heading = uheading(rng);
        target.vx = speed * std::cos(heading);
        target.vy = speed * std::sin(heading);
        target.paused = upause(rng) < params.pause_prob;
    }
}

void step_follower_agent(AgentModel& agent, const std::vector<wire::Waypoint>& waypoints,
                         Timestamp now, Duration dt, double max_speed) {
    if (dt.micros <= 0)
        throw std::invalid_argument("step_follower_agent: dt must be > 0");
    if (waypoints.empty())
        return;
    const wire::Waypoint* goal = nullptr;
    for (const auto& wp : waypoints) {
        if (wp.t_us >= now.micros) {
            goal = &wp;
            break;
        }
    }
    if (goal == nullptr)
        goal = &waypoints.back();  // behind schedule: chase the newest estimate
    double dx = goal->x - agent.x;
    double dy = goal->y - agent.y;
    double dist = std::hypot(dx, dy);
    if (dist == 0.0)
        return;
    double remaining_s = (Timestamp{goal->t_us} - now).seconds();
    double speed = remaining_s > 0 ? std::min(max_speed, dist / remaining_s) : max_speed;
    double step = std::min(dist, speed * dt.seconds());
    agent.x += dx / dist * step;
    agent.y += dy / dist * step;
}

Observation observe(const AgentModel& agent, const TargetModel& target, double fov_radius) {
    Observation obs;
    obs.agent_x = agent.x;
    obs.agent_y = agent.y;
    double dist = std::hypot(target.x - agent.x, target.y - agent.y);
    if (dist <= fov_radius) {
        obs.found = true;
        obs.target_x = target.x;
        obs.target_y = target.y;
    }
    return obs;
}

namespace {

struct TrackingErrorAcc {
    double sum{0.0};
    std::size_t samples{0};
    std::size_t outside_fov{0};
    double mean() const { return samples ? sum / static_cast<double>(samples) : 0.0; }
};

struct PooledSamples {
    std::vector<double> ages;
};

double pooled_percentile(std::vector<double> samples, double q) {
    if (samples.empty())
        return 0.0;
    std::sort(samples.begin(), samples.end());
    auto idx = static_cast<std::size_t>(std::ceil(q * static_cast<double>(samples.size())));
    if (idx == 0)
        idx = 1;
    return samples[std::min(idx, samples.size()) - 1];
}

constexpr Duration kPercentileStep = Duration::from_millis(1);

MetricsRow row_from_trace(const std::string& id, const AoiTrace& trace, std::uint64_t bytes,
                          std::uint64_t deliveries, double tracking_error) {
    MetricsRow row;
    row.follower_id = id;
    double span = (trace.end() - trace.start()).seconds();
    row.mean_aoi_s = span > 0 ? trace.integrate(trace.start(), trace.end()) / span : 0.0;
    row.p95_aoi_s = trace.percentile(0.95, kPercentileStep);
    row.throughput_bps = span > 0 ? static_cast<double>(bytes) * 8.0 / span : 0.0;
    row.deliveries = deliveries;
    row.mean_tracking_error_m = tracking_error;
    return row;
}

void sample_trace_into(const AoiTrace& trace, std::vector<double>& pool) {
    for (Timestamp t = trace.start(); t <= trace.end(); t = t + kPercentileStep)
        pool.push_back(trace.age_at(t));
}

}  // namespace

MetricsReport run_polling_sim(const SimConfig& config) {
    config.validate();

    EventCore core;
    SimNet net(core, config, config.seed);
    SimTransport transport(core, net);

    std::mt19937_64 mobility_rng(config.seed * 0x9E3779B97F4A7C15ULL + 1);

    const bool tracking = config.scenario == Scenario::MobilityTracking;

    TargetParams target_params{config.target_speed_max, config.resample_period_s,
                               config.pause_prob, config.arena_w, config.arena_h};
    TargetModel target;
    target.x = config.arena_w / 2;
    target.y = config.arena_h / 2;

    struct Node {
        std::unique_ptr<FollowerMiddleware> mw;
        Duration clock_offset{};
        AgentModel agent;
        TrackingErrorAcc error;
    };
    std::vector<Node> nodes(config.n);

    FollowerConfig fcfg;
    fcfg.queue = config.queue;
    fcfg.fifo_interval = config.rate_fps > 0 ? Duration::from_seconds(1.0 / config.rate_fps)
                                             : Duration{};
    fcfg.fifo_capacity = config.capacity;
    fcfg.max_payload = config.max_payload;

    Duration turnaround = Duration::from_seconds(config.turnaround_s);

    for (std::size_t i = 0; i < config.n; ++i) {
        auto id = static_cast<std::uint16_t>(i + 1);
        nodes[i].mw = std::make_unique<FollowerMiddleware>(id, fcfg);
        if (!config.clock_offset_s.empty())
            nodes[i].clock_offset = Duration::from_seconds(config.clock_offset_s[i]);
        nodes[i].agent.x = config.arena_w / 2;
        nodes[i].agent.y = config.arena_h / 2;

        net.set_handler(id, [&core, &net, &node = nodes[i], id, turnaround](const Datagram& dg) {
            auto decoded = wire::decode(dg.bytes);
            auto* packet = std::get_if<wire::Packet>(&decoded);
            if (packet == nullptr)
                return;
            Timestamp fnow = core.now() + node.clock_offset;
            if (const auto* poll = std::get_if<wire::PollPacket>(&packet->body)) {
                auto frag = node.mw->handle_poll(*poll, fnow);
                if (!frag)
                    return;
                core.schedule(core.now() + turnaround, [&net, id, f = std::move(*frag)]() {
                    net.send(id, 0, wire::encode(wire::Packet{id, f}));
                });
            } else if (const auto* req = std::get_if<wire::SyncReqPacket>(&packet->body)) {
                std::int64_t t1 = req->t1_us;
                std::int64_t t2 = fnow.micros;
                core.schedule(core.now() + turnaround, [&core, &net, &node, id, t1, t2]() {
                    wire::SyncRespPacket resp{t1, t2, (core.now() + node.clock_offset).micros};
                    net.send(id, 0, wire::encode(wire::Packet{id, resp}));
                });
            }
        });
    }

    Timestamp end = Timestamp::from_seconds(config.duration_s);

    // Pre-schedule sensing: one generation event per follower per frame.
    Duration gen_interval = Duration::from_seconds(1.0 / config.gen_fps);
    for (std::size_t i = 0; i < config.n; ++i) {
        for (Timestamp t = Timestamp{0} + gen_interval; t < end; t = t + gen_interval) {
            core.schedule(t, [&node = nodes[i], &core, &target, &config, tracking]() {
                Timestamp fnow = core.now() + node.clock_offset;
                std::vector<std::uint8_t> payload;
                if (tracking) {
                    Observation obs = observe(node.agent, target, config.fov_radius);
                    payload = encode_observation(obs, config.payload_bytes);
                } else {
                    payload.assign(config.payload_bytes, 0);
                }
                node.mw->offer_update(std::move(payload), fnow, fnow);
            });
        }
    }

    // Mobility and tracking-error sampling grid.
    if (tracking) {
        Duration tick = Duration::from_seconds(config.error_sample_s);
        for (Timestamp t = Timestamp{0} + tick; t <= end; t = t + tick) {
            core.schedule(t, [&nodes, &core, &target, &mobility_rng, &config, target_params,
                              tick]() {
                step_target(target, tick, mobility_rng, target_params);
                for (auto& node : nodes) {
                    if (config.control_enabled)
                        step_follower_agent(node.agent, node.mw->control().waypoints(),
                                            core.now(), tick, config.agent_speed_max);
                    double err = std::hypot(node.agent.x - target.x, node.agent.y - target.y);
                    node.error.sum += err;
                    node.error.samples += 1;
                    if (err > config.fov_radius)
                        node.error.outside_fov += 1;
                }
            });
        }
    }

    LeaderConfig lcfg;
    lcfg.timeout = Duration::from_seconds(config.timeout_s);
    lcfg.window = config.window;
    lcfg.p_floor = config.p_floor;
    lcfg.policy = config.policy;
    lcfg.policy_seed = config.seed;
    lcfg.sync_period = Duration::from_seconds(config.sync_period_s);
    lcfg.sync_enabled = config.sync_enabled;
    lcfg.sticky_update = config.sticky_update;

    std::unique_ptr<TrackingProcessor> processor;
    if (tracking)
        processor = std::make_unique<TrackingProcessor>(
            Duration::from_seconds(config.waypoint_horizon_s), config.waypoint_count);

    Leader leader(core, transport, lcfg, processor.get());
    for (std::size_t i = 0; i < config.n; ++i)
        leader.register_follower(static_cast<std::uint16_t>(i + 1),
                                 Endpoint{static_cast<std::uint32_t>(i + 1), 0});
    leader.run_until(end);
    Timestamp final_now = core.now();
    leader.finish(final_now);

    MetricsReport report;
    report.run_id = "seed" + std::to_string(config.seed);
    report.policy = to_string(config.policy);
    report.n = config.n;
    report.rate_fps = config.gen_fps;
    report.polls = leader.stats().polls;
    report.responses = leader.stats().responses;
    report.timeouts = leader.stats().timeouts;

    double integral_sum = 0.0, span_sum = 0.0, bytes_sum = 0.0, error_sum = 0.0;
    std::uint64_t deliveries_sum = 0;
    std::vector<double> pooled;
    for (std::size_t i = 0; i < config.n; ++i) {
        auto id = static_cast<std::uint16_t>(i + 1);
        const FollowerEntry& entry = leader.followers().at(id);
        const auto& totals = leader.metrics().totals(id);
        double err = nodes[i].error.mean();
        report.rows.push_back(row_from_trace(std::to_string(id), entry.trace, totals.bytes,
                                             totals.deliveries, err));
        double span = (entry.trace.end() - entry.trace.start()).seconds();
        integral_sum += entry.trace.integrate(entry.trace.start(), entry.trace.end());
        span_sum += span;
        bytes_sum += static_cast<double>(totals.bytes);
        deliveries_sum += totals.deliveries;
        error_sum += err;
        sample_trace_into(entry.trace, pooled);
    }
    MetricsRow all;
    all.follower_id = "all";
    all.mean_aoi_s = span_sum > 0 ? integral_sum / span_sum : 0.0;
    all.p95_aoi_s = pooled_percentile(std::move(pooled), 0.95);
    all.throughput_bps =
        span_sum > 0 ? bytes_sum * 8.0 * static_cast<double>(config.n) / span_sum : 0.0;
    all.deliveries = deliveries_sum;
    all.mean_tracking_error_m = error_sum / static_cast<double>(config.n);
    report.rows.push_back(all);
    return report;
}

MetricsReport run_random_access_baseline(const SimConfig& config) {
    config.validate();

    EventCore core;
    std::mt19937_64 rng(config.seed * 0x9E3779B97F4A7C15ULL + 2);
    std::mt19937_64 mobility_rng(config.seed * 0x9E3779B97F4A7C15ULL + 1);
    std::uniform_real_distribution<double> u(0.0, 1.0);

    const bool tracking = config.scenario == Scenario::MobilityTracking;
    double rate = config.rate_fps > 0 ? config.rate_fps : config.gen_fps;

    TargetParams target_params{config.target_speed_max, config.resample_period_s,
                               config.pause_prob, config.arena_w, config.arena_h};
    TargetModel target;
    target.x = config.arena_w / 2;
    target.y = config.arena_h / 2;

    std::size_t frag_count =
        std::max<std::size_t>(1, (config.payload_bytes + config.max_payload - 1) /
                                     config.max_payload);

    struct Station {
        std::deque<SensorUpdate> fifo;
        std::size_t next_frag{0};
        std::uint32_t next_seq{1};
        AgeRecord age;
        AoiTrace trace;
        std::uint64_t bytes{0};
        std::uint64_t deliveries{0};
        AgentModel agent;
        std::vector<wire::Waypoint> waypoints;
        TrackingErrorAcc error;
    };
    std::vector<Station> stations(config.n);
    for (std::size_t i = 0; i < config.n; ++i) {
        stations[i].age = AgeRecord{static_cast<std::uint16_t>(i + 1), Timestamp{0},
                                    Timestamp{0}};
        stations[i].trace.begin(Timestamp{0}, 0.0);
        stations[i].agent.x = config.arena_w / 2;
        stations[i].agent.y = config.arena_h / 2;
    }

    std::unique_ptr<TrackingProcessor> processor;
    if (tracking)
        processor = std::make_unique<TrackingProcessor>(
            Duration::from_seconds(config.waypoint_horizon_s), config.waypoint_count);

    Timestamp end = Timestamp::from_seconds(config.duration_s);

    // Generation at the configured fixed rate, FIFO with a capacity bound.
    Duration gen_interval = Duration::from_seconds(1.0 / rate);
    for (std::size_t i = 0; i < config.n; ++i) {
        for (Timestamp t = Timestamp{0} + gen_interval; t < end; t = t + gen_interval) {
            core.schedule(t, [&station = stations[i], &core, &target, &config, tracking]() {
                if (station.fifo.size() >= config.capacity)
                    return;  // queue overflow, update dropped
                SensorUpdate update;
                update.gen_ts = core.now();
                update.update_seq = station.next_seq++;
                if (tracking) {
                    Observation obs = observe(station.agent, target, config.fov_radius);
                    update.payload = encode_observation(obs, config.payload_bytes);
                } else {
                    update.payload.assign(config.payload_bytes, 0);
                }
                station.fifo.push_back(std::move(update));
            });
        }
    }

    std::uint64_t deliveries_total = 0;

    // Contention slots: every backlogged station transmits its head fragment
    // with probability q; exactly one transmitter wins the slot (subject to
    // link loss), two or more collide and all fail.
    Duration slot = Duration::from_seconds(config.slot_s);
    for (Timestamp t = Timestamp{0}; t < end; t = t + slot) {
        core.schedule(t, [&stations, &core, &rng, &u, &config, &processor, &deliveries_total,
                          frag_count, slot, tracking]() {
            std::vector<std::size_t> transmitters;
            for (std::size_t i = 0; i < stations.size(); ++i) {
                if (stations[i].fifo.empty())
                    continue;
                if (u(rng) < config.txprob)
                    transmitters.push_back(i);
            }
            if (transmitters.size() != 1)
                return;  // idle slot or collision
            std::size_t i = transmitters.front();
            if (u(rng) < config.link_loss(i))
                return;  // lost on the link despite winning the slot
            Station& station = stations[i];
            station.next_frag += 1;
            if (station.next_frag < frag_count)
                return;
            // final fragment: the update is delivered at the end of the slot
            station.next_frag = 0;
            SensorUpdate update = std::move(station.fifo.front());
            station.fifo.pop_front();
            Timestamp delivered_at = core.now() + slot;
            Duration age = record_delivery(station.age, update.gen_ts, delivered_at);
            station.trace.on_delivery(delivered_at, age.seconds());
            station.bytes += update.payload.size();
            station.deliveries += 1;
            deliveries_total += 1;
            if (tracking && processor) {
                auto result = processor->process(static_cast<std::uint16_t>(i + 1), update,
                                                 delivered_at);
                if (result.has_waypoints && config.control_enabled) {
                    // control delivered downlink after the fixed latency
                    core.schedule(delivered_at + Duration::from_seconds(config.latency_s),
                                  [&station, wps = std::move(result.waypoints)]() {
                                      station.waypoints = wps;
                                  });
                }
            }
        });
    }

    if (tracking) {
        Duration tick = Duration::from_seconds(config.error_sample_s);
        for (Timestamp t = Timestamp{0} + tick; t <= end; t = t + tick) {
            core.schedule(t, [&stations, &core, &target, &mobility_rng, &config, target_params,
                              tick]() {
                step_target(target, tick, mobility_rng, target_params);
                for (auto& station : stations) {
                    if (config.control_enabled)
                        step_follower_agent(station.agent, station.waypoints, core.now(), tick,
                                            config.agent_speed_max);
                    double err =
                        std::hypot(station.agent.x - target.x, station.agent.y - target.y);
                    station.error.sum += err;
                    station.error.samples += 1;
                    if (err > config.fov_radius)
                        station.error.outside_fov += 1;
                }
            });
        }
    }

    while (core.next_time())
        core.run_next();
    core.advance_to(end);

    MetricsReport report;
    report.run_id = "seed" + std::to_string(config.seed);
    report.policy = "baseline";
    report.n = config.n;
    report.rate_fps = rate;

    double integral_sum = 0.0, span_sum = 0.0, bytes_sum = 0.0, error_sum = 0.0;
    std::vector<double> pooled;
    for (std::size_t i = 0; i < config.n; ++i) {
        Station& station = stations[i];
        Timestamp trace_end = std::max(end, station.trace.end());
        station.trace.finish(trace_end);
        double err = station.error.mean();
        report.rows.push_back(row_from_trace(std::to_string(i + 1), station.trace,
                                             station.bytes, station.deliveries, err));
        double span = (station.trace.end() - station.trace.start()).seconds();
        integral_sum += station.trace.integrate(station.trace.start(), station.trace.end());
        span_sum += span;
        bytes_sum += static_cast<double>(station.bytes);
        error_sum += err;
        sample_trace_into(station.trace, pooled);
    }
    MetricsRow all;
    all.follower_id = "all";
    all.mean_aoi_s = span_sum > 0 ? integral_sum / span_sum : 0.0;
    all.p95_aoi_s = pooled_percentile(std::move(pooled), 0.95);
    all.throughput_bps =
        span_sum > 0 ? bytes_sum * 8.0 * static_cast<double>(config.n) / span_sum : 0.0;
    all.deliveries = deliveries_total;
    all.mean_tracking_error_m = error_sum / static_cast<double>(config.n);
    report.rows.push_back(all);
    return report;
}

}  // namespace freshlink
