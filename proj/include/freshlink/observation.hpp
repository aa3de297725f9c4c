#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace freshlink {

/// Payload carried by tracking updates: the observed target position (when
/// inside the field of view) and the observing agent's own position.
struct Observation {
    bool found{false};
    double target_x{0.0}, target_y{0.0};
    double agent_x{0.0}, agent_y{0.0};
};

/// Encodes an observation, zero-padded to frame_size bytes so the network
/// load matches the configured frame size (minimum 33 bytes).
std::vector<std::uint8_t> encode_observation(const Observation& obs, std::size_t frame_size);

std::optional<Observation> decode_observation(std::span<const std::uint8_t> bytes);

}  // namespace freshlink
