#include "freshlink/wire.hpp"

#include <bit>
#include <cstring>
#include <stdexcept>

namespace freshlink::wire {

namespace {

void put_u8(std::vector<std::uint8_t>& out, std::uint8_t v) { out.push_back(v); }

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
    out.push_back(static_cast<std::uint8_t>(v >> 8));
    out.push_back(static_cast<std::uint8_t>(v));
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int s = 24; s >= 0; s -= 8)
        out.push_back(static_cast<std::uint8_t>(v >> s));
}

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
    for (int s = 56; s >= 0; s -= 8)
        out.push_back(static_cast<std::uint8_t>(v >> s));
}

void put_i64(std::vector<std::uint8_t>& out, std::int64_t v) {
    put_u64(out, static_cast<std::uint64_t>(v));
}

void put_f64(std::vector<std::uint8_t>& out, double v) {
    put_u64(out, std::bit_cast<std::uint64_t>(v));
}

class Reader {
  public:
    explicit Reader(std::span<const std::uint8_t> b) : data_(b) {}

    bool need(std::size_t n) const { return pos_ + n <= data_.size(); }
    std::size_t remaining() const { return data_.size() - pos_; }

    std::uint8_t u8() { return data_[pos_++]; }
    std::uint16_t u16() {
        std::uint16_t v = static_cast<std::uint16_t>(data_[pos_] << 8 | data_[pos_ + 1]);
        pos_ += 2;
        return v;
    }
    std::uint32_t u32() {
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i)
            v = v << 8 | data_[pos_ + i];
        pos_ += 4;
        return v;
    }
    std::uint64_t u64() {
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i)
            v = v << 8 | data_[pos_ + i];
        pos_ += 8;
        return v;
    }
    std::int64_t i64() { return static_cast<std::int64_t>(u64()); }
    double f64() { return std::bit_cast<double>(u64()); }
    std::vector<std::uint8_t> bytes(std::size_t n) {
        std::vector<std::uint8_t> out(data_.begin() + pos_, data_.begin() + pos_ + n);
        pos_ += n;
        return out;
    }

  private:
    std::span<const std::uint8_t> data_;
    std::size_t pos_{0};
};

}  // namespace

std::string to_string(DecodeError e) {
    switch (e) {
        case DecodeError::BadMagic: return "bad magic";
        case DecodeError::BadVersion: return "bad version";
        case DecodeError::BadType: return "bad packet type";
        case DecodeError::Truncated: return "truncated";
        case DecodeError::LengthMismatch: return "length mismatch";
        case DecodeError::BadValue: return "bad field value";
    }
    return "?";
}

std::vector<std::uint8_t> encode(const Packet& p) {
    std::vector<std::uint8_t> out;
    out.reserve(64);
    put_u8(out, kMagic);
    put_u8(out, kVersion);

    if (const auto* poll = std::get_if<PollPacket>(&p.body)) {
        put_u8(out, static_cast<std::uint8_t>(PacketType::Poll));
        put_u16(out, p.sender);
        put_u32(out, poll->poll_seq);
        put_u16(out, poll->target);
        put_u8(out, poll->ack ? 1 : 0);
        if (poll->ack) {
            put_u32(out, poll->ack->update_seq);
            put_u16(out, poll->ack->frag_index);
        }
        if (poll->control.size() > 255)
            throw std::length_error("encode: too many control entries");
        put_u8(out, static_cast<std::uint8_t>(poll->control.size()));
        for (const auto& entry : poll->control) {
            put_u16(out, entry.follower_id);
            if (entry.waypoints.size() > 255)
                throw std::length_error("encode: too many waypoints");
            put_u8(out, static_cast<std::uint8_t>(entry.waypoints.size()));
            for (const auto& wp : entry.waypoints) {
                put_i64(out, wp.t_us);
                put_f64(out, wp.x);
                put_f64(out, wp.y);
                put_f64(out, wp.z);
            }
        }
    } else if (const auto* frag = std::get_if<FragPacket>(&p.body)) {
        if (frag->payload.size() > 65535)
            throw std::length_error("encode: oversize fragment payload");
        if (frag->is_nodata() && !frag->payload.empty())
            throw std::length_error("encode: NoData fragment with payload");
        put_u8(out, static_cast<std::uint8_t>(PacketType::Frag));
        put_u16(out, p.sender);
        put_u32(out, frag->update_seq);
        put_u16(out, frag->frag_index);
        put_u16(out, frag->frag_count);
        put_i64(out, frag->gen_ts_us);
        put_u16(out, static_cast<std::uint16_t>(frag->payload.size()));
        out.insert(out.end(), frag->payload.begin(), frag->payload.end());
    } else if (const auto* req = std::get_if<SyncReqPacket>(&p.body)) {
        put_u8(out, static_cast<std::uint8_t>(PacketType::SyncReq));
        put_u16(out, p.sender);
        put_i64(out, req->t1_us);
    } else {
        const auto& resp = std::get<SyncRespPacket>(p.body);
        put_u8(out, static_cast<std::uint8_t>(PacketType::SyncResp));
        put_u16(out, p.sender);
        put_i64(out, resp.t1_us);
        put_i64(out, resp.t2_us);
        put_i64(out, resp.t3_us);
    }
    return out;
}

DecodeResult decode(std::span<const std::uint8_t> bytes) {
    Reader r(bytes);
    if (!r.need(5))
        return DecodeError::Truncated;
    if (r.u8() != kMagic)
        return DecodeError::BadMagic;
    if (r.u8() != kVersion)
        return DecodeError::BadVersion;
    std::uint8_t type = r.u8();
    Packet p;
    p.sender = r.u16();

    switch (type) {
        case static_cast<std::uint8_t>(PacketType::Poll): {
            PollPacket poll;
            if (!r.need(7))
                return DecodeError::Truncated;
            poll.poll_seq = r.u32();
            poll.target = r.u16();
            std::uint8_t ack_flag = r.u8();
            if (ack_flag > 1)
                return DecodeError::BadValue;
            if (ack_flag) {
                if (!r.need(6))
                    return DecodeError::Truncated;
                FragmentAck ack;
                ack.update_seq = r.u32();
                ack.frag_index = r.u16();
                poll.ack = ack;
            }
            if (!r.need(1))
                return DecodeError::Truncated;
            std::uint8_t entries = r.u8();
            for (std::uint8_t i = 0; i < entries; ++i) {
                if (!r.need(3))
                    return DecodeError::Truncated;
                ControlEntry entry;
                entry.follower_id = r.u16();
                std::uint8_t wps = r.u8();
                if (!r.need(static_cast<std::size_t>(wps) * 32))
                    return DecodeError::Truncated;
                for (std::uint8_t k = 0; k < wps; ++k) {
                    Waypoint wp;
                    wp.t_us = r.i64();
                    wp.x = r.f64();
                    wp.y = r.f64();
                    wp.z = r.f64();
                    entry.waypoints.push_back(wp);
                }
                poll.control.push_back(std::move(entry));
            }
            p.body = std::move(poll);
            break;
        }
        case static_cast<std::uint8_t>(PacketType::Frag): {
            if (!r.need(18))
                return DecodeError::Truncated;
            FragPacket frag;
            frag.update_seq = r.u32();
            frag.frag_index = r.u16();
            frag.frag_count = r.u16();
            frag.gen_ts_us = r.i64();
            std::uint16_t len = r.u16();
            if (frag.frag_count == 0 && len != 0)
                return DecodeError::LengthMismatch;
            if (r.remaining() < len)
                return DecodeError::Truncated;
            if (r.remaining() > len)
                return DecodeError::LengthMismatch;
            frag.payload = r.bytes(len);
            p.body = std::move(frag);
            break;
        }
        case static_cast<std::uint8_t>(PacketType::SyncReq): {
            if (!r.need(8))
                return DecodeError::Truncated;
            SyncReqPacket req;
            req.t1_us = r.i64();
            p.body = req;
            break;
        }
        case static_cast<std::uint8_t>(PacketType::SyncResp): {
            if (!r.need(24))
                return DecodeError::Truncated;
            SyncRespPacket resp;
            resp.t1_us = r.i64();
            resp.t2_us = r.i64();
            resp.t3_us = r.i64();
            p.body = resp;
            break;
        }
        default:
            return DecodeError::BadType;
    }
    if (r.remaining() != 0)
        return DecodeError::LengthMismatch;
    return p;
}

}  // namespace freshlink::wire
