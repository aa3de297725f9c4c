#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include "freshlink/time.hpp"
#include "freshlink/transport.hpp"

namespace freshlink::testing {

/// Manually advanced clock for scripted exchanges.
struct FakeClock : Clock {
    Timestamp t;
    Timestamp now() override { return t; }
};

/// Transport whose recv drains a scripted inbox. The on_send hook lets a test
/// synthesize replies (and advance a FakeClock) at send time.
struct ScriptTransport : Transport {
    std::function<void(const Endpoint&, const std::vector<std::uint8_t>&)> on_send;
    std::deque<Datagram> inbox;
    std::vector<std::pair<Endpoint, std::vector<std::uint8_t>>> sent;

    void send(const Endpoint& to, std::span<const std::uint8_t> bytes) override {
        std::vector<std::uint8_t> copy(bytes.begin(), bytes.end());
        sent.emplace_back(to, copy);
        if (on_send)
            on_send(to, copy);
    }

    std::optional<Datagram> recv(Timestamp) override {
        if (inbox.empty())
            return std::nullopt;
        Datagram d = std::move(inbox.front());
        inbox.pop_front();
        return d;
    }
};

}  // namespace freshlink::testing
