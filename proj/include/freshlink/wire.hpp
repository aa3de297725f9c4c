#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace freshlink::wire {

inline constexpr std::uint8_t kMagic = 0xA6;
inline constexpr std::uint8_t kVersion = 0x01;

enum class PacketType : std::uint8_t {
    Poll = 1,
    Frag = 2,
    SyncReq = 3,
    SyncResp = 4,
};

struct Waypoint {
    std::int64_t t_us{0};
    double x{0.0}, y{0.0}, z{0.0};
    bool operator==(const Waypoint&) const = default;
};

struct ControlEntry {
    std::uint16_t follower_id{0};
    std::vector<Waypoint> waypoints;
    bool operator==(const ControlEntry&) const = default;
};

struct FragmentAck {
    std::uint32_t update_seq{0};
    std::uint16_t frag_index{0};
    bool operator==(const FragmentAck&) const = default;
    /// Cumulative coverage order.
    bool covers(std::uint32_t seq, std::uint16_t index) const {
        return update_seq > seq || (update_seq == seq && frag_index >= index);
    }
};

struct PollPacket {
    std::uint32_t poll_seq{0};
    std::uint16_t target{0};
    std::optional<FragmentAck> ack;
    std::vector<ControlEntry> control;
    bool operator==(const PollPacket&) const = default;
};

struct FragPacket {
    std::uint32_t update_seq{0};
    std::uint16_t frag_index{0};
    std::uint16_t frag_count{0};  // 0 means NoData
    std::int64_t gen_ts_us{0};
    std::vector<std::uint8_t> payload;
    bool is_nodata() const { return frag_count == 0; }
    bool operator==(const FragPacket&) const = default;
};

struct SyncReqPacket {
    std::int64_t t1_us{0};
    bool operator==(const SyncReqPacket&) const = default;
};

struct SyncRespPacket {
    std::int64_t t1_us{0};
    std::int64_t t2_us{0};
    std::int64_t t3_us{0};
    bool operator==(const SyncRespPacket&) const = default;
};

struct Packet {
    std::uint16_t sender{0};
    std::variant<PollPacket, FragPacket, SyncReqPacket, SyncRespPacket> body;
    bool operator==(const Packet&) const = default;
};

enum class DecodeError {
    BadMagic,
    BadVersion,
    BadType,
    Truncated,
    LengthMismatch,
    BadValue,
};

std::string to_string(DecodeError e);

using DecodeResult = std::variant<Packet, DecodeError>;

/// Serializes to the fixed big-endian layout. Throws std::length_error when a
/// field exceeds its wire range (payload > 65535 bytes, > 255 control entries
/// or waypoints).
std::vector<std::uint8_t> encode(const Packet& p);

/// Inverse of encode on valid inputs; rejects wrong magic/version, unknown
/// type, truncation, payload length mismatch and trailing bytes.
DecodeResult decode(std::span<const std::uint8_t> bytes);

}  // namespace freshlink::wire
