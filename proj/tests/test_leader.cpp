#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <random>

#include "fakes.hpp"
#include "freshlink/leader.hpp"
#include "freshlink/observation.hpp"

using namespace freshlink;
using freshlink::testing::FakeClock;
using freshlink::testing::ScriptTransport;

namespace {

Timestamp ts(double s) { return Timestamp::from_seconds(s); }

struct Rig {
    FakeClock clock;
    ScriptTransport transport;
    LeaderConfig config;
    Leader leader;
    explicit Rig(LeaderConfig cfg = [] {
        LeaderConfig c;
        c.sync_enabled = false;
        return c;
    }()) : config(cfg), leader(clock, transport, cfg) {}

    FollowerEntry& entry(std::uint16_t id) {
        // followers() is a read-only view; tests poke the entry directly.
        return const_cast<FollowerEntry&>(leader.followers().at(id));
    }
};

wire::FragPacket frag(std::uint32_t seq, std::uint16_t index, std::uint16_t count,
                      double gen_s, std::vector<std::uint8_t> payload) {
    return {seq, index, count, ts(gen_s).micros, std::move(payload)};
}

}  // namespace

TEST_CASE("single-fragment update completes immediately and drops AoI to the delay") {
    Rig rig;
    rig.clock.t = ts(0);
    rig.leader.register_follower(1, {1, 0});
    rig.clock.t = ts(5);
    auto done = rig.leader.on_fragment(rig.entry(1), frag(1, 0, 1, 4.0, {1, 2, 3}), ts(5));
    REQUIRE(done);
    CHECK(done->payload == std::vector<std::uint8_t>{1, 2, 3});
    CHECK(age_at(rig.entry(1).age, ts(5)).seconds() == doctest::Approx(1.0));
}

TEST_CASE("multi-fragment update completes on the last piece") {
    Rig rig;
    rig.clock.t = ts(0);
    rig.leader.register_follower(1, {1, 0});
    rig.clock.t = ts(1);
    CHECK(!rig.leader.on_fragment(rig.entry(1), frag(1, 0, 3, 0.5, {1}), ts(1)));
    CHECK(!rig.leader.on_fragment(rig.entry(1), frag(1, 1, 3, 0.5, {2}), ts(1.1)));
    auto done = rig.leader.on_fragment(rig.entry(1), frag(1, 2, 3, 0.5, {3}), ts(1.2));
    REQUIRE(done);
    CHECK(done->payload == std::vector<std::uint8_t>{1, 2, 3});
    CHECK(done->update_seq == 1);
}

TEST_CASE("duplicate fragments are idempotent") {
    Rig rig;
    rig.clock.t = ts(0);
    rig.leader.register_follower(1, {1, 0});
    rig.clock.t = ts(1);
    CHECK(!rig.leader.on_fragment(rig.entry(1), frag(1, 0, 2, 0.5, {1}), ts(1)));
    CHECK(!rig.leader.on_fragment(rig.entry(1), frag(1, 0, 2, 0.5, {1}), ts(1.1)));
    auto done = rig.leader.on_fragment(rig.entry(1), frag(1, 1, 2, 0.5, {2}), ts(1.2));
    REQUIRE(done);
    CHECK(done->payload == std::vector<std::uint8_t>{1, 2});
}

TEST_CASE("a newer update_seq discards the incomplete older buffer") {
    Rig rig;
    rig.clock.t = ts(0);
    rig.leader.register_follower(1, {1, 0});
    rig.clock.t = ts(1);
    CHECK(!rig.leader.on_fragment(rig.entry(1), frag(1, 0, 2, 0.5, {1}), ts(1)));
    CHECK(!rig.leader.on_fragment(rig.entry(1), frag(2, 0, 2, 0.6, {9}), ts(1.1)));
    // the older fragment can no longer complete anything
    CHECK(!rig.leader.on_fragment(rig.entry(1), frag(1, 1, 2, 0.5, {2}), ts(1.2)));
    auto done = rig.leader.on_fragment(rig.entry(1), frag(2, 1, 2, 0.6, {8}), ts(1.3));
    REQUIRE(done);
    CHECK(done->payload == std::vector<std::uint8_t>{9, 8});
}

TEST_CASE("frag_count mismatch resets the buffer and counts a fault") {
    Rig rig;
    rig.clock.t = ts(0);
    rig.leader.register_follower(1, {1, 0});
    rig.clock.t = ts(1);
    CHECK(!rig.leader.on_fragment(rig.entry(1), frag(1, 0, 3, 0.5, {1}), ts(1)));
    CHECK(!rig.leader.on_fragment(rig.entry(1), frag(1, 1, 2, 0.5, {2}), ts(1.1)));
    CHECK(rig.leader.stats().protocol_faults >= 1);
}

TEST_CASE("NoData counts as a link success without touching AoI") {
    Rig rig;
    rig.clock.t = ts(0);
    rig.leader.register_follower(1, {1, 0});
    rig.clock.t = ts(2);
    auto done = rig.leader.on_fragment(rig.entry(1), frag(0, 0, 0, 2.0, {}), ts(2));
    CHECK(!done);
    CHECK(rig.entry(1).link.seen() == 1);
    CHECK(rig.entry(1).link.successes() == 1);
    CHECK(age_at(rig.entry(1).age, ts(2)).seconds() == doctest::Approx(2.0));
}

TEST_CASE("timeouts record failures per the worked examples") {
    Rig rig;
    rig.clock.t = ts(0);
    rig.leader.register_follower(1, {1, 0});
    auto& e = rig.entry(1);
    for (int i = 0; i < 3; ++i)
        e.link.record(true);
    rig.leader.on_timeout(e);
    CHECK(e.link.estimate() == doctest::Approx(0.75));

    Rig worst;
    worst.clock.t = ts(0);
    worst.leader.register_follower(1, {1, 0});
    for (int i = 0; i < 10; ++i)
        worst.leader.on_timeout(worst.entry(1));
    CHECK(worst.entry(1).link.estimate() == doctest::Approx(0.05));

    rig.leader.on_fragment(e, frag(0, 0, 0, 0.1, {}), ts(0.2));
    CHECK(e.link.seen() == 5);  // timeout then success, both recorded
}

TEST_CASE("reassembly is the identity under shuffling and duplication") {
    std::mt19937_64 rng(41);
    Rig rig;
    rig.clock.t = ts(0);
    rig.leader.register_follower(1, {1, 0});
    for (int rep = 0; rep < 100; ++rep) {
        std::vector<std::uint8_t> payload(rng() % 16384);
        for (auto& b : payload)
            b = static_cast<std::uint8_t>(rng());
        SensorUpdate u{ts(rep), static_cast<std::uint32_t>(rep + 1), payload};
        auto frags = fragment_update(u, 700);

        std::vector<std::size_t> order(frags.size());
        for (std::size_t i = 0; i < order.size(); ++i)
            order[i] = i;
        std::shuffle(order.begin(), order.end(), rng);
        for (std::size_t i = 0, dups = rng() % 4 + 1; i < dups; ++i)
            order.push_back(order[rng() % order.size()]);

        rig.clock.t = ts(rep + 1);
        std::optional<SensorUpdate> done;
        for (std::size_t idx : order) {
            const auto& f = frags[idx];
            auto got = rig.leader.on_fragment(
                rig.entry(1),
                {f.update_seq, f.frag_index, f.frag_count, f.gen_ts.micros, f.payload},
                ts(rep + 1));
            if (got)
                done = got;
        }
        REQUIRE(done);
        CHECK(done->payload == payload);
    }
}

TEST_CASE("out-of-range fragment index is a protocol fault") {
    Rig rig;
    rig.clock.t = ts(0);
    rig.leader.register_follower(1, {1, 0});
    auto before = rig.leader.stats().protocol_faults;
    CHECK(!rig.leader.on_fragment(rig.entry(1), frag(1, 5, 2, 0.1, {1}), ts(1)));
    CHECK(rig.leader.stats().protocol_faults == before + 1);
}

TEST_CASE("future-dated completions clamp to now and count a fault") {
    Rig rig;
    rig.clock.t = ts(0);
    rig.leader.register_follower(1, {1, 0});
    auto before = rig.leader.stats().protocol_faults;
    auto done = rig.leader.on_fragment(rig.entry(1), frag(1, 0, 1, 9.0, {1}), ts(2));
    REQUIRE(done);
    CHECK(rig.leader.stats().protocol_faults == before + 1);
    CHECK(age_at(rig.entry(1).age, ts(2)).micros == 0);
}

TEST_CASE("sync recovers exact offsets under symmetric delays") {
    for (double offset_s : {-1.0, 0.0, 1.0}) {
        FakeClock clock;
        clock.t = ts(100);
        ScriptTransport transport;
        Endpoint follower{1, 0};
        Duration d = Duration::from_millis(5);
        transport.on_send = [&](const Endpoint&, const std::vector<std::uint8_t>& bytes) {
            auto decoded = wire::decode(bytes);
            auto& req = std::get<wire::SyncReqPacket>(std::get<wire::Packet>(decoded).body);
            Timestamp t2 = Timestamp{req.t1_us} + d + Duration::from_seconds(offset_s);
            clock.t = Timestamp{req.t1_us} + d + d;  // t4 on the leader clock
            wire::Packet resp{1, wire::SyncRespPacket{req.t1_us, t2.micros, t2.micros}};
            transport.inbox.push_back({follower, wire::encode(resp)});
        };
        auto got = sync_clock(clock, transport, follower);
        REQUIRE(got);
        CHECK(got->seconds() == doctest::Approx(offset_s).epsilon(1e-9));
    }
}

TEST_CASE("sync error under asymmetric delays is half the asymmetry") {
    FakeClock clock;
    clock.t = ts(50);
    ScriptTransport transport;
    Endpoint follower{1, 0};
    Duration fwd = Duration::from_millis(2), back = Duration::from_millis(8);
    transport.on_send = [&](const Endpoint&, const std::vector<std::uint8_t>& bytes) {
        auto decoded = wire::decode(bytes);
        auto& req = std::get<wire::SyncReqPacket>(std::get<wire::Packet>(decoded).body);
        Timestamp t2 = Timestamp{req.t1_us} + fwd;  // true offset 0
        clock.t = Timestamp{req.t1_us} + fwd + back;
        wire::Packet resp{1, wire::SyncRespPacket{req.t1_us, t2.micros, t2.micros}};
        transport.inbox.push_back({follower, wire::encode(resp)});
    };
    auto got = sync_clock(clock, transport, follower);
    REQUIRE(got);
    CHECK(std::abs(got->seconds()) == doctest::Approx(0.003).epsilon(1e-9));
}

TEST_CASE("sync worked example t1=0 t2=105 t3=106 t4=11") {
    FakeClock clock;
    clock.t = Timestamp{0};
    ScriptTransport transport;
    Endpoint follower{1, 0};
    transport.on_send = [&](const Endpoint&, const std::vector<std::uint8_t>&) {
        clock.t = Timestamp{11};
        wire::Packet resp{1, wire::SyncRespPacket{0, 105, 106}};
        transport.inbox.push_back({follower, wire::encode(resp)});
    };
    auto got = sync_clock(clock, transport, follower);
    REQUIRE(got);
    CHECK(got->micros == 100);
}

TEST_CASE("sync gives up after the configured retries") {
    FakeClock clock;
    clock.t = ts(0);
    ScriptTransport transport;  // never replies
    CHECK(!sync_clock(clock, transport, {1, 0}, Duration::from_millis(1), 3));
    CHECK(transport.sent.size() == 3);
}

TEST_CASE("tracking processor extrapolates waypoints linearly") {
    TrackingProcessor proc(Duration::from_seconds(2.0), 4);  // delta = 0.5 s
    Observation first{true, 0.0, 0.0, 0.0, 0.0};
    SensorUpdate u1{ts(0), 1, encode_observation(first, 64)};
    auto r1 = proc.process(1, u1, ts(0.1));
    CHECK(!r1.has_waypoints);  // cold start: one observation only
    CHECK(r1.v_hat == doctest::Approx(0.0));

    Observation second{true, 1.0, 0.0, 0.0, 0.0};
    SensorUpdate u2{ts(1), 2, encode_observation(second, 64)};
    auto r2 = proc.process(1, u2, ts(1.1));
    REQUIRE(r2.has_waypoints);
    REQUIRE(r2.waypoints.size() == 4);
    for (std::size_t k = 0; k < 4; ++k) {
        CHECK(r2.waypoints[k].x == doctest::Approx(1.0 + 0.5 * (k + 1)).epsilon(1e-9));
        CHECK(r2.waypoints[k].y == doctest::Approx(0.0));
        CHECK(r2.waypoints[k].t_us == (ts(1) + Duration::from_millis(500 * (k + 1))).micros);
    }
    CHECK(r2.has_weight);
    CHECK(r2.v_hat == doctest::Approx(1.0).epsilon(1e-9));  // stationary agent
}

TEST_CASE("stationary target yields waypoints at the current position") {
    TrackingProcessor proc(Duration::from_seconds(2.0), 4);
    Observation obs{true, 3.0, 4.0, 0.0, 0.0};
    proc.process(1, {ts(0), 1, encode_observation(obs, 64)}, ts(0.1));
    auto r = proc.process(1, {ts(1), 2, encode_observation(obs, 64)}, ts(1.1));
    REQUIRE(r.has_waypoints);
    for (const auto& wp : r.waypoints) {
        CHECK(wp.x == doctest::Approx(3.0));
        CHECK(wp.y == doctest::Approx(4.0));
    }
}

TEST_CASE("not-found observations leave waypoints unchanged") {
    TrackingProcessor proc(Duration::from_seconds(2.0), 2);
    Observation a{true, 0.0, 0.0, 0.0, 0.0}, b{true, 1.0, 0.0, 0.0, 0.0};
    proc.process(1, {ts(0), 1, encode_observation(a, 64)}, ts(0.1));
    auto with = proc.process(1, {ts(1), 2, encode_observation(b, 64)}, ts(1.1));
    REQUIRE(with.has_waypoints);

    Observation missing{false, 0.0, 0.0, 5.0, 5.0};
    auto r = proc.process(1, {ts(2), 3, encode_observation(missing, 64)}, ts(2.1));
    CHECK(!r.has_waypoints);
}
