#pragma once

#include <cstdint>
#include <deque>
#include <random>
#include <string>
#include <vector>

namespace freshlink {

/// Windowed link-reliability estimator: success fraction of the last W poll
/// outcomes, clamped below by p_floor. With no outcomes yet the estimate is
/// an optimistic 1.0; before the window fills, the divisor is the number of
/// outcomes seen.
class LinkEstimator {
  public:
    explicit LinkEstimator(std::size_t window = 10, double p_floor = 0.05);

    void record(bool success);
    double estimate() const;

    std::size_t window() const { return window_; }
    std::size_t seen() const { return outcomes_.size(); }
    std::size_t successes() const { return successes_; }

  private:
    std::size_t window_;
    double p_floor_;
    std::deque<bool> outcomes_;
    std::size_t successes_{0};
};

/// Exponential moving average of observed relative speeds:
/// w' = alpha*w + (1-alpha)*v_hat.
class WeightEstimator {
  public:
    explicit WeightEstimator(double alpha = 0.8, double initial = 1.0);

    /// v_hat must be non-negative.
    void observe(double v_hat);
    double value() const { return w_; }

  private:
    double alpha_;
    double w_;
};

struct FollowerView {
    std::uint16_t id{0};
    double age_s{0.0};
    double reliability{1.0};  // in (0, 1]
    double weight{1.0};       // >= 0
    bool eligible{true};
};

struct SchedulerView {
    std::vector<FollowerView> followers;
};

enum class PolicyKind { Whittle, MaxAge, RoundRobin, UniformRandom };

std::string to_string(PolicyKind k);

/// argmax over eligible i of w_i * p_i * A_i^2, ties broken by lowest id.
/// Throws std::invalid_argument on an empty eligible set.
std::uint16_t whittle_select(const SchedulerView& view);

/// Stateful policy dispatch over the eligible followers of a view.
class Policy {
  public:
    explicit Policy(PolicyKind kind, std::uint64_t seed = 0);

    std::uint16_t select(const SchedulerView& view);
    PolicyKind kind() const { return kind_; }

  private:
    PolicyKind kind_;
    bool has_last_{false};
    std::uint16_t last_served_{0};
    std::mt19937_64 rng_;
};

}  // namespace freshlink
