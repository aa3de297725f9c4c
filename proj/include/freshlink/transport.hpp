#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "freshlink/time.hpp"

namespace freshlink {

/// Opaque datagram endpoint. In socket mode host/port are an IPv4 address;
/// in simulation host is the node id and port is unused.
struct Endpoint {
    std::uint32_t host{0};
    std::uint16_t port{0};
    auto operator<=>(const Endpoint&) const = default;
};

struct Datagram {
    Endpoint from;
    std::vector<std::uint8_t> bytes;
};

/// Best-effort datagram transport. recv blocks until a datagram arrives or
/// the deadline (in the owning Clock's domain) passes.
class Transport {
  public:
    virtual ~Transport() = default;
    virtual void send(const Endpoint& to, std::span<const std::uint8_t> bytes) = 0;
    virtual std::optional<Datagram> recv(Timestamp deadline) = 0;
};

/// Wall-clock time (CLOCK_REALTIME) in microseconds since the Unix epoch.
/// Socket-mode leader and followers share this epoch for generation
/// timestamps.
class SystemClock : public Clock {
  public:
    Timestamp now() override;
};

/// UDP/IPv4 transport bound to a local port (0 picks an ephemeral one).
class UdpTransport : public Transport {
  public:
    UdpTransport(std::uint32_t bind_host, std::uint16_t bind_port, Clock& clock);
    ~UdpTransport() override;

    UdpTransport(const UdpTransport&) = delete;
    UdpTransport& operator=(const UdpTransport&) = delete;

    void send(const Endpoint& to, std::span<const std::uint8_t> bytes) override;
    std::optional<Datagram> recv(Timestamp deadline) override;

    std::uint16_t local_port() const { return local_port_; }

  private:
    int fd_{-1};
    std::uint16_t local_port_{0};
    Clock& clock_;
};

/// Parses "a.b.c.d:port" (or ":port" / "port" meaning 0.0.0.0).
std::optional<Endpoint> parse_endpoint(const std::string& text);
std::string endpoint_to_string(const Endpoint& ep);

}  // namespace freshlink
