#include "freshlink/scheduler.hpp"

#include <algorithm>
#include <stdexcept>

namespace freshlink {

LinkEstimator::LinkEstimator(std::size_t window, double p_floor)
    : window_(window), p_floor_(p_floor) {
    if (window_ == 0)
        throw std::invalid_argument("LinkEstimator: zero window");
}

void LinkEstimator::record(bool success) {
    outcomes_.push_back(success);
    if (success)
        ++successes_;
    if (outcomes_.size() > window_) {
        if (outcomes_.front())
            --successes_;
        outcomes_.pop_front();
    }
}

double LinkEstimator::estimate() const {
    if (outcomes_.empty())
        return 1.0;  // optimistic cold start
    double est = static_cast<double>(successes_) / static_cast<double>(outcomes_.size());
    return std::max(p_floor_, est);
}

WeightEstimator::WeightEstimator(double alpha, double initial) : alpha_(alpha), w_(initial) {
    if (alpha_ < 0.0 || alpha_ >= 1.0)
        throw std::invalid_argument("WeightEstimator: alpha outside [0,1)");
    if (w_ < 0.0)
        throw std::invalid_argument("WeightEstimator: negative initial weight");
}

void WeightEstimator::observe(double v_hat) {
    if (v_hat < 0.0)
        throw std::invalid_argument("WeightEstimator: negative speed");
    w_ = alpha_ * w_ + (1.0 - alpha_) * v_hat;
}

std::string to_string(PolicyKind k) {
    switch (k) {
        case PolicyKind::Whittle: return "whittle";
        case PolicyKind::MaxAge: return "maxage";
        case PolicyKind::RoundRobin: return "roundrobin";
        case PolicyKind::UniformRandom: return "random";
    }
    return "?";
}

namespace {

std::vector<const FollowerView*> eligible_of(const SchedulerView& view) {
    std::vector<const FollowerView*> out;
    for (const auto& f : view.followers)
        if (f.eligible)
            out.push_back(&f);
    std::sort(out.begin(), out.end(),
              [](const FollowerView* a, const FollowerView* b) { return a->id < b->id; });
    if (out.empty())
        throw std::invalid_argument("select: no eligible follower");
    return out;
}

}  // namespace

std::uint16_t whittle_select(const SchedulerView& view) {
    auto eligible = eligible_of(view);
    const FollowerView* best = nullptr;
    double best_index = -1.0;
    for (const auto* f : eligible) {
        if (f->reliability <= 0.0)
            throw std::invalid_argument("whittle_select: non-positive reliability");
        double index = f->weight * f->reliability * f->age_s * f->age_s;
        if (best == nullptr || index > best_index) {
            best = f;
            best_index = index;
        }
    }
    return best->id;
}

Policy::Policy(PolicyKind kind, std::uint64_t seed) : kind_(kind), rng_(seed) {}

std::uint16_t Policy::select(const SchedulerView& view) {
    switch (kind_) {
        case PolicyKind::Whittle:
            return whittle_select(view);
        case PolicyKind::MaxAge: {
            auto eligible = eligible_of(view);
            const FollowerView* best = nullptr;
            for (const auto* f : eligible)
                if (best == nullptr || f->age_s > best->age_s)
                    best = f;
            return best->id;
        }
        case PolicyKind::RoundRobin: {
            auto eligible = eligible_of(view);
            const FollowerView* pick = nullptr;
            if (has_last_) {
                for (const auto* f : eligible)
                    if (f->id > last_served_) {
                        pick = f;
                        break;
                    }
            }
            if (pick == nullptr)
                pick = eligible.front();  // wraparound (or first ever)
            last_served_ = pick->id;
            has_last_ = true;
            return pick->id;
        }
        case PolicyKind::UniformRandom: {
            auto eligible = eligible_of(view);
            std::uniform_int_distribution<std::size_t> d(0, eligible.size() - 1);
            return eligible[d(rng_)]->id;
        }
    }
    throw std::logic_error("Policy::select: unknown policy");
}

}  // namespace freshlink
