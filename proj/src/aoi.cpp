#include "freshlink/aoi.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace freshlink {

Duration age_at(const AgeRecord& record, Timestamp now) {
    if (now < record.tau)
        throw std::invalid_argument("age_at: now earlier than tau");
    return now - record.tau;
}

Duration record_delivery(AgeRecord& record, Timestamp gen_ts, Timestamp now) {
    if (gen_ts > now)
        throw std::invalid_argument("record_delivery: future-dated generation timestamp");
    if (gen_ts > record.tau)
        record.tau = gen_ts;
    return now - record.tau;
}

void AoiTrace::begin(Timestamp t0, double age0_s) {
    if (!breakpoints_.empty())
        throw std::logic_error("AoiTrace::begin: already started");
    if (age0_s < 0.0)
        throw std::invalid_argument("AoiTrace::begin: negative age");
    breakpoints_.push_back({t0, age0_s});
}

void AoiTrace::on_delivery(Timestamp t, double new_age_s) {
    if (breakpoints_.empty())
        throw std::logic_error("AoiTrace::on_delivery: trace not started");
    if (finished_)
        throw std::logic_error("AoiTrace::on_delivery: trace finished");
    if (new_age_s < 0.0)
        throw std::invalid_argument("AoiTrace::on_delivery: negative age");
    auto& last = breakpoints_.back();
    if (t < last.at)
        throw std::invalid_argument("AoiTrace::on_delivery: time moved backwards");
    if (t == last.at) {
        last.age_s = std::min(last.age_s, new_age_s);
        return;
    }
    breakpoints_.push_back({t, new_age_s});
}

void AoiTrace::finish(Timestamp t1) {
    if (breakpoints_.empty())
        throw std::logic_error("AoiTrace::finish: trace not started");
    if (finished_)
        return;
    auto& last = breakpoints_.back();
    if (t1 < last.at)
        throw std::invalid_argument("AoiTrace::finish: time moved backwards");
    if (t1 > last.at)
        breakpoints_.push_back({t1, last.age_s + (t1 - last.at).seconds()});
    finished_ = true;
}

double AoiTrace::age_at(Timestamp t) const {
    if (breakpoints_.empty() || t < start() || t > end())
        throw std::invalid_argument("AoiTrace::age_at: outside trace coverage");
    // Last breakpoint at or before t.
    auto it = std::upper_bound(breakpoints_.begin(), breakpoints_.end(), t,
                               [](Timestamp v, const Breakpoint& b) { return v < b.at; });
    --it;
    return it->age_s + (t - it->at).seconds();
}

double AoiTrace::integrate(Timestamp t0, Timestamp t1) const {
    if (!(t0 < t1))
        throw std::invalid_argument("AoiTrace::integrate: empty interval");
    if (breakpoints_.empty() || t0 < start() || t1 > end())
        throw std::invalid_argument("AoiTrace::integrate: gap in trace coverage");
    double area = 0.0;
    for (std::size_t k = 0; k + 1 < breakpoints_.size(); ++k) {
        Timestamp seg_a = breakpoints_[k].at;
        Timestamp seg_b = breakpoints_[k + 1].at;
        Timestamp lo = std::max(seg_a, t0);
        Timestamp hi = std::min(seg_b, t1);
        if (!(lo < hi))
            continue;
        double a = breakpoints_[k].age_s + (lo - seg_a).seconds();
        double len = (hi - lo).seconds();
        area += a * len + 0.5 * len * len;
    }
    return area;
}

double AoiTrace::percentile(double q, Duration sample_step) const {
    if (breakpoints_.empty())
        throw std::invalid_argument("AoiTrace::percentile: empty trace");
    if (!(q > 0.0 && q < 1.0))
        throw std::invalid_argument("AoiTrace::percentile: q outside (0,1)");
    if (sample_step.micros <= 0)
        throw std::invalid_argument("AoiTrace::percentile: non-positive step");
    std::vector<double> samples;
    for (Timestamp t = start(); t <= end(); t = t + sample_step)
        samples.push_back(age_at(t));
    std::sort(samples.begin(), samples.end());
    std::size_t n = samples.size();
    auto idx = static_cast<std::size_t>(std::ceil(q * static_cast<double>(n)));
    if (idx == 0)
        idx = 1;
    return samples[std::min(idx, n) - 1];
}

void MetricsAccumulator::register_follower(std::uint16_t id, Timestamp now, double weight) {
    advance_to(now);
    totals_.try_emplace(id);
    live_[id] = Live{0.0, weight};
    if (!started_) {
        last_ = now;
        started_ = true;
    }
}

void MetricsAccumulator::advance_to(Timestamp now) {
    if (!started_) {
        last_ = now;
        started_ = true;
        return;
    }
    if (now < last_)
        throw std::invalid_argument("MetricsAccumulator: time moved backwards");
    double dt = (now - last_).seconds();
    if (dt == 0.0)
        return;
    for (auto& [id, live] : live_) {
        double slab = live.age_s * dt + 0.5 * dt * dt;
        totals_[id].age_integral_s2 += slab;
        totals_[id].weighted_integral_s2 += live.weight * slab;
        live.age_s += dt;
    }
    elapsed_s_ += dt;
    last_ = now;
}

void MetricsAccumulator::record_delivery(std::uint16_t id, double new_age_s, std::uint64_t bytes,
                                         Timestamp now) {
    advance_to(now);
    auto it = live_.find(id);
    if (it == live_.end())
        throw std::invalid_argument("MetricsAccumulator: unknown follower");
    it->second.age_s = new_age_s;
    totals_[id].deliveries += 1;
    totals_[id].bytes += bytes;
}

void MetricsAccumulator::set_weight(std::uint16_t id, double weight, Timestamp now) {
    advance_to(now);
    auto it = live_.find(id);
    if (it == live_.end())
        throw std::invalid_argument("MetricsAccumulator: unknown follower");
    it->second.weight = weight;
}

const MetricsAccumulator::FollowerTotals& MetricsAccumulator::totals(std::uint16_t id) const {
    auto it = totals_.find(id);
    if (it == totals_.end())
        throw std::invalid_argument("MetricsAccumulator: unknown follower");
    return it->second;
}

double weighted_cost(const MetricsAccumulator& acc) {
    if (acc.elapsed_s() <= 0.0)
        throw std::invalid_argument("weighted_cost: no elapsed time");
    double sum = 0.0;
    for (const auto& [id, t] : acc.all_totals())
        sum += t.weighted_integral_s2;
    return sum / acc.elapsed_s();
}

}  // namespace freshlink
