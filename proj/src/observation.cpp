#include "freshlink/observation.hpp"

#include <algorithm>
#include <bit>

namespace freshlink {

namespace {

constexpr std::size_t kObservationBytes = 1 + 4 * 8;

void put_f64(std::vector<std::uint8_t>& out, double v) {
    auto bits = std::bit_cast<std::uint64_t>(v);
    for (int s = 56; s >= 0; s -= 8)
        out.push_back(static_cast<std::uint8_t>(bits >> s));
}

double get_f64(std::span<const std::uint8_t> b, std::size_t pos) {
    std::uint64_t bits = 0;
    for (std::size_t i = 0; i < 8; ++i)
        bits = bits << 8 | b[pos + i];
    return std::bit_cast<double>(bits);
}

}  // namespace

std::vector<std::uint8_t> encode_observation(const Observation& obs, std::size_t frame_size) {
    std::vector<std::uint8_t> out;
    out.reserve(std::max(frame_size, kObservationBytes));
    out.push_back(obs.found ? 1 : 0);
    put_f64(out, obs.target_x);
    put_f64(out, obs.target_y);
    put_f64(out, obs.agent_x);
    put_f64(out, obs.agent_y);
    if (out.size() < frame_size)
        out.resize(frame_size, 0);
    return out;
}

std::optional<Observation> decode_observation(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < kObservationBytes)
        return std::nullopt;
    if (bytes[0] > 1)
        return std::nullopt;
    Observation obs;
    obs.found = bytes[0] == 1;
    obs.target_x = get_f64(bytes, 1);
    obs.target_y = get_f64(bytes, 9);
    obs.agent_x = get_f64(bytes, 17);
    obs.agent_y = get_f64(bytes, 25);
    return obs;
}

}  // namespace freshlink
