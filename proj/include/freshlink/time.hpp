#pragma once

#include <compare>
#include <cstdint>

namespace freshlink {

/// Signed duration in microseconds.
struct Duration {
    std::int64_t micros{0};

    static constexpr Duration from_micros(std::int64_t us) { return Duration{us}; }
    static constexpr Duration from_millis(std::int64_t ms) { return Duration{ms * 1000}; }
    static constexpr Duration from_seconds(double s) {
        return Duration{static_cast<std::int64_t>(s * 1e6 + (s >= 0 ? 0.5 : -0.5))};
    }

    constexpr double seconds() const { return static_cast<double>(micros) * 1e-6; }

    constexpr auto operator<=>(const Duration&) const = default;
    constexpr Duration operator+(Duration o) const { return Duration{micros + o.micros}; }
    constexpr Duration operator-(Duration o) const { return Duration{micros - o.micros}; }
    constexpr Duration operator-() const { return Duration{-micros}; }
};

/// Microseconds since an agreed epoch (simulation start or Unix epoch).
struct Timestamp {
    std::int64_t micros{0};

    static constexpr Timestamp from_micros(std::int64_t us) { return Timestamp{us}; }
    static constexpr Timestamp from_seconds(double s) {
        return Timestamp{static_cast<std::int64_t>(s * 1e6 + (s >= 0 ? 0.5 : -0.5))};
    }

    constexpr double seconds() const { return static_cast<double>(micros) * 1e-6; }

    constexpr auto operator<=>(const Timestamp&) const = default;
    constexpr Duration operator-(Timestamp o) const { return Duration{micros - o.micros}; }
    constexpr Timestamp operator+(Duration d) const { return Timestamp{micros + d.micros}; }
    constexpr Timestamp operator-(Duration d) const { return Timestamp{micros - d.micros}; }
};

/// Monotone or virtual time source; deadline arguments to Transport::recv
/// are in this clock's domain.
class Clock {
  public:
    virtual ~Clock() = default;
    virtual Timestamp now() = 0;
};

}  // namespace freshlink
