#include "freshlink/transport.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <sys/time.h>
#include <unistd.h>

#include <cstring>
#include <stdexcept>
#include <string>

namespace freshlink {

Timestamp SystemClock::now() {
    timeval tv{};
    ::gettimeofday(&tv, nullptr);
    return Timestamp{static_cast<std::int64_t>(tv.tv_sec) * 1000000 + tv.tv_usec};
}

UdpTransport::UdpTransport(std::uint32_t bind_host, std::uint16_t bind_port, Clock& clock)
    : clock_(clock) {
    fd_ = ::socket(AF_INET, SOCK_DGRAM, 0);
    if (fd_ < 0)
        throw std::runtime_error("UdpTransport: socket() failed");
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_addr.s_addr = htonl(bind_host);
    addr.sin_port = htons(bind_port);
    if (::bind(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
        ::close(fd_);
        throw std::runtime_error("UdpTransport: bind() failed");
    }
    sockaddr_in bound{};
    socklen_t len = sizeof(bound);
    ::getsockname(fd_, reinterpret_cast<sockaddr*>(&bound), &len);
    local_port_ = ntohs(bound.sin_port);
}

UdpTransport::~UdpTransport() {
    if (fd_ >= 0)
        ::close(fd_);
}

void UdpTransport::send(const Endpoint& to, std::span<const std::uint8_t> bytes) {
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_addr.s_addr = htonl(to.host);
    addr.sin_port = htons(to.port);
    ::sendto(fd_, bytes.data(), bytes.size(), 0, reinterpret_cast<sockaddr*>(&addr),
             sizeof(addr));
}

std::optional<Datagram> UdpTransport::recv(Timestamp deadline) {
    for (;;) {
        Timestamp now = clock_.now();
        std::int64_t wait_us = (deadline - now).micros;
        if (wait_us < 0)
            return std::nullopt;
        pollfd pfd{fd_, POLLIN, 0};
        int timeout_ms = static_cast<int>((wait_us + 999) / 1000);
        int rc = ::poll(&pfd, 1, timeout_ms);
        if (rc == 0)
            return std::nullopt;
        if (rc < 0) {
            if (errno == EINTR)
                continue;
            throw std::runtime_error("UdpTransport: poll() failed");
        }
        std::vector<std::uint8_t> buf(65536);
        sockaddr_in from{};
        socklen_t from_len = sizeof(from);
        ssize_t n = ::recvfrom(fd_, buf.data(), buf.size(), 0,
                               reinterpret_cast<sockaddr*>(&from), &from_len);
        if (n < 0) {
            if (errno == EINTR || errno == EAGAIN)
                continue;
            throw std::runtime_error("UdpTransport: recvfrom() failed");
        }
        buf.resize(static_cast<std::size_t>(n));
        return Datagram{Endpoint{ntohl(from.sin_addr.s_addr), ntohs(from.sin_port)},
                        std::move(buf)};
    }
}

std::optional<Endpoint> parse_endpoint(const std::string& text) {
    std::string host = "0.0.0.0";
    std::string port_str = text;
    auto colon = text.rfind(':');
    if (colon != std::string::npos) {
        if (colon > 0)
            host = text.substr(0, colon);
        port_str = text.substr(colon + 1);
    }
    in_addr addr{};
    if (::inet_pton(AF_INET, host.c_str(), &addr) != 1)
        return std::nullopt;
    try {
        unsigned long port = std::stoul(port_str);
        if (port > 65535)
            return std::nullopt;
        return Endpoint{ntohl(addr.s_addr), static_cast<std::uint16_t>(port)};
    } catch (...) {
        return std::nullopt;
    }
}

std::string endpoint_to_string(const Endpoint& ep) {
    in_addr addr{};
    addr.s_addr = htonl(ep.host);
    char buf[INET_ADDRSTRLEN] = {0};
    ::inet_ntop(AF_INET, &addr, buf, sizeof(buf));
    return std::string(buf) + ":" + std::to_string(ep.port);
}

}  // namespace freshlink
