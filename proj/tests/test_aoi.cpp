#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "freshlink/aoi.hpp"

using namespace freshlink;

namespace {

Timestamp ts(double s) { return Timestamp::from_seconds(s); }

/// Midpoint-rule oracle on a grid the trace breakpoints are aligned to; exact
/// for a piecewise-linear trace up to floating-point rounding.
double riemann_integral(const AoiTrace& trace, Timestamp t0, Timestamp t1,
                        std::int64_t step_us) {
    double sum = 0.0;
    for (std::int64_t t = t0.micros; t < t1.micros; t += step_us)
        sum += trace.age_at(Timestamp{t + step_us / 2});
    return sum * static_cast<double>(step_us) * 1e-6;
}

/// Builds a trace with delivery instants and post-delivery ages aligned to
/// whole multiples of grid_us.
AoiTrace random_trace(std::mt19937_64& rng, std::int64_t grid_us, Timestamp& t0_out,
                      Timestamp& t1_out, std::size_t deliveries = 20) {
    std::uniform_int_distribution<std::int64_t> gap(1, 5000);   // grid cells between deliveries
    std::uniform_int_distribution<std::int64_t> age(0, 2000);   // post-delivery age, grid cells
    AoiTrace trace;
    Timestamp t{0};
    trace.begin(t, 0.0);
    for (std::size_t i = 0; i < deliveries; ++i) {
        t = t + Duration{gap(rng) * grid_us};
        trace.on_delivery(t, static_cast<double>(age(rng) * grid_us) * 1e-6);
    }
    Timestamp end = t + Duration{gap(rng) * grid_us};
    trace.finish(end);
    t0_out = Timestamp{0};
    t1_out = end;
    return trace;
}

}  // namespace

TEST_CASE("age_at basics") {
    AgeRecord rec{1, ts(100), ts(100)};
    CHECK(age_at(rec, ts(103)).seconds() == doctest::Approx(3.0));
    CHECK(age_at(rec, ts(100)).micros == 0);
    CHECK_THROWS_AS(age_at(rec, ts(99)), std::invalid_argument);
}

TEST_CASE("record_delivery updates tau to the max") {
    AgeRecord rec{1, ts(0), ts(0)};
    CHECK(record_delivery(rec, ts(10), ts(12)).seconds() == doctest::Approx(2.0));
    CHECK(rec.tau == ts(10));

    rec.tau = ts(100);
    CHECK(record_delivery(rec, ts(90), ts(110)).seconds() == doctest::Approx(10.0));
    CHECK(rec.tau == ts(100));  // out-of-order delivery ignored
    CHECK(record_delivery(rec, ts(100), ts(110)).seconds() == doctest::Approx(10.0));
    CHECK(rec.tau == ts(100));  // duplicate timestamp
    CHECK(age_at(rec, ts(103)).seconds() == doctest::Approx(3.0));

    CHECK_THROWS_AS(record_delivery(rec, ts(120), ts(110)), std::invalid_argument);
}

TEST_CASE("tau never decreases under random deliveries") {
    std::mt19937_64 rng(7);
    AgeRecord rec{1, ts(0), ts(0)};
    std::uniform_real_distribution<double> u(0.0, 50.0);
    double now = 50.0;
    for (int i = 0; i < 1000; ++i) {
        Timestamp prev = rec.tau;
        record_delivery(rec, ts(u(rng)), ts(now));
        CHECK(rec.tau >= prev);
        now += 0.01;
    }
}

TEST_CASE("periodic trace integrates to d + D/2") {
    // deliveries every D=2 s with delay d=0.5 s over 100 s
    AoiTrace trace;
    trace.begin(ts(0), 0.5);
    for (int t = 2; t <= 100; t += 2)
        trace.on_delivery(ts(t), 0.5);
    trace.finish(ts(100));
    double mean = trace.integrate(ts(0), ts(100)) / 100.0;
    CHECK(mean == doctest::Approx(1.5).epsilon(1e-12));
}

TEST_CASE("rampi without deliveries integrates to T^2/2") {
    AoiTrace trace;
    trace.begin(ts(0), 0.0);
    trace.finish(ts(30));
    CHECK(trace.integrate(ts(0), ts(30)) == doctest::Approx(30.0 * 30.0 / 2).epsilon(1e-12));
}

TEST_CASE("integrate matches dense Riemann sampling on random traces") {
    std::mt19937_64 rng(42);
    const std::int64_t grid_us = 100;  // 0.1 ms
    for (int rep = 0; rep < 100; ++rep) {
        Timestamp t0, t1;
        AoiTrace trace = random_trace(rng, grid_us, t0, t1);
        double exact = trace.integrate(t0, t1);
        double dense = riemann_integral(trace, t0, t1, grid_us);
        CHECK(std::abs(exact - dense) <= 1e-6 * std::max(1.0, std::abs(exact)));
    }
}

TEST_CASE("integrate rejects uncovered intervals") {
    AoiTrace trace;
    trace.begin(ts(10), 0.0);
    trace.finish(ts(20));
    CHECK_THROWS(trace.integrate(ts(0), ts(20)));
    CHECK_THROWS(trace.integrate(ts(10), ts(25)));
}

TEST_CASE("slope between deliveries is exactly 1") {
    AoiTrace trace;
    trace.begin(ts(0), 0.25);
    trace.on_delivery(ts(1), 0.1);
    trace.finish(ts(3));
    CHECK(trace.age_at(ts(0.5)) == doctest::Approx(0.75).epsilon(1e-12));
    CHECK(trace.age_at(ts(2)) == doctest::Approx(1.1).epsilon(1e-12));
    CHECK(trace.age_at(ts(1)) == doctest::Approx(0.1));  // post-delivery value at the breakpoint
}

TEST_CASE("percentile of a steady sawtooth") {
    // ramp 0.5 -> 2.5 repeated: d=0.5, D=2 -> p95 = 0.5 + 0.95*2 = 2.4
    AoiTrace trace;
    trace.begin(ts(0), 0.5);
    for (int t = 2; t <= 200; t += 2)
        trace.on_delivery(ts(t), 0.5);
    trace.finish(ts(200));
    double p95 = trace.percentile(0.95, Duration::from_millis(1));
    CHECK(p95 == doctest::Approx(2.4).epsilon(0.002));
}

TEST_CASE("percentile of a constant-age trace is that constant") {
    AoiTrace trace;
    trace.begin(ts(0), 2.0);
    for (int k = 1; k <= 1000; ++k)
        trace.on_delivery(Timestamp{k * 1000}, 2.0);
    trace.finish(ts(1));
    CHECK(trace.percentile(0.5, Duration::from_millis(1)) == doctest::Approx(2.0).epsilon(1e-9));
    CHECK(trace.percentile(0.99, Duration::from_millis(1)) == doctest::Approx(2.0).epsilon(1e-9));
}

TEST_CASE("percentile matches a brute-force sort of the grid samples") {
    AoiTrace trace;  // two-rate sawtooth
    trace.begin(ts(0), 0.1);
    for (int t = 1; t <= 10; ++t)
        trace.on_delivery(ts(t), 0.1);
    for (int t = 13; t <= 31; t += 3)
        trace.on_delivery(ts(t), 0.2);
    trace.finish(ts(31));

    Duration step = Duration::from_millis(1);
    std::vector<double> samples;
    for (Timestamp t = trace.start(); t <= trace.end(); t = t + step)
        samples.push_back(trace.age_at(t));
    std::sort(samples.begin(), samples.end());
    for (double q : {0.1, 0.5, 0.9, 0.95, 0.99}) {
        auto idx = static_cast<std::size_t>(
            std::ceil(q * static_cast<double>(samples.size())));
        double oracle = samples[std::max<std::size_t>(idx, 1) - 1];
        CHECK(trace.percentile(q, step) == doctest::Approx(oracle).epsilon(1e-12));
    }
}

TEST_CASE("percentile is monotone in q and approaches the maximum") {
    std::mt19937_64 rng(3);
    Timestamp t0, t1;
    AoiTrace trace = random_trace(rng, 100, t0, t1);
    Duration step = Duration::from_millis(1);
    double prev = 0.0;
    for (double q = 0.05; q < 1.0; q += 0.05) {
        double v = trace.percentile(q, step);
        CHECK(v >= prev);
        prev = v;
    }
    double max_sample = 0.0;
    for (Timestamp t = t0; t <= t1; t = t + step)
        max_sample = std::max(max_sample, trace.age_at(t));
    CHECK(trace.percentile(0.9999, step) == doctest::Approx(max_sample).epsilon(1e-9));
}

TEST_CASE("weighted cost reduces to mean AoI for one unit-weight follower") {
    MetricsAccumulator acc;
    acc.register_follower(1, ts(0));
    for (int t = 2; t <= 100; t += 2)
        acc.record_delivery(1, 0.5, 0, ts(t));
    acc.advance_to(ts(100));
    // initial ramp starts at 0 rather than 0.5, shaving 0.5*2 s of area
    double expected = (1.5 * 100.0 - 1.0) / 100.0;
    CHECK(weighted_cost(acc) == doctest::Approx(expected).epsilon(1e-9));
}

TEST_CASE("weighted cost is additive over identical followers") {
    MetricsAccumulator one, two;
    one.register_follower(1, ts(0));
    two.register_follower(1, ts(0));
    two.register_follower(2, ts(0));
    for (int t = 1; t <= 50; ++t) {
        one.record_delivery(1, 0.1, 0, ts(t));
        two.record_delivery(1, 0.1, 0, ts(t));
        two.record_delivery(2, 0.1, 0, ts(t));
    }
    one.advance_to(ts(50));
    two.advance_to(ts(50));
    CHECK(weighted_cost(two) == doctest::Approx(2 * weighted_cost(one)).epsilon(1e-9));
}

TEST_CASE("doubling weights mid-run lands strictly between 1x and 2x") {
    auto run = [](bool bump) {
        MetricsAccumulator acc;
        acc.register_follower(1, ts(0));
        acc.register_follower(2, ts(0));
        for (int t = 1; t <= 40; ++t) {
            if (bump && t == 20) {
                acc.set_weight(1, 2.0, ts(t));
                acc.set_weight(2, 2.0, ts(t));
            }
            acc.record_delivery(1, 0.2, 0, ts(t));
            acc.record_delivery(2, 0.3, 0, ts(t));
        }
        acc.advance_to(ts(40));
        return weighted_cost(acc);
    };
    double base = run(false);
    double bumped = run(true);
    CHECK(bumped > base);
    CHECK(bumped < 2 * base);

    // stepwise oracle: weight 1 on [0,20), 2 on [20,40) over identical traces
    MetricsAccumulator acc;
    acc.register_follower(1, ts(0));
    acc.register_follower(2, ts(0));
    double first_half = 0, second_half = 0;
    for (int t = 1; t <= 40; ++t) {
        acc.record_delivery(1, 0.2, 0, ts(t));
        acc.record_delivery(2, 0.3, 0, ts(t));
    }
    acc.advance_to(ts(40));
    first_half = acc.totals(1).age_integral_s2 + acc.totals(2).age_integral_s2;
    (void)second_half;
    // split the unweighted area at t=20 by re-running the prefix
    MetricsAccumulator prefix;
    prefix.register_follower(1, ts(0));
    prefix.register_follower(2, ts(0));
    for (int t = 1; t <= 20; ++t) {
        prefix.record_delivery(1, 0.2, 0, ts(t));
        prefix.record_delivery(2, 0.3, 0, ts(t));
    }
    prefix.advance_to(ts(20));
    double area_prefix = prefix.totals(1).age_integral_s2 + prefix.totals(2).age_integral_s2;
    double oracle = (area_prefix + 2 * (first_half - area_prefix)) / 40.0;
    CHECK(bumped == doctest::Approx(oracle).epsilon(1e-9));
}

TEST_CASE("weighted cost rejects zero elapsed time") {
    MetricsAccumulator acc;
    acc.register_follower(1, ts(0));
    CHECK_THROWS(weighted_cost(acc));
}
