#pragma once

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cstdint>
#include <cstring>
#include <string>
#include <vector>

#include "hubpir/bits.hpp"
#include "hubpir/errors.hpp"

namespace hubpir {

// Framing: u32 little-endian payload length, then payload = message type
// (u8) + body. For a fixed database version every QUERY frame has the same
// length by construction, so frame sizes carry no information about the
// query.
enum class FrameType : std::uint8_t {
    kHello = 1,  // client -> server, empty body, probes the db version
    kMeta = 2,   // server -> client: counter u64, digest u64, header, dir digest u64
    kQuery = 3,  // db_version u64, mode u8, bit count u32, packed bits
    kAnswer = 4, // db_version u64, bit count u32, packed bits
    kError = 5,  // code u16, utf-8 message
};

enum class WireError : std::uint16_t {
    kBadFrame = 1,
    kLengthMismatch = 2,
    kVersionMismatch = 3,
    kBadMode = 4,
    kInternal = 5,
};

constexpr std::size_t kMaxFrameBytes = std::size_t{1} << 30;

struct Frame {
    FrameType type;
    std::vector<std::uint8_t> body;
};

namespace wiredetail {

inline void put16(std::vector<std::uint8_t>& out, std::uint16_t v) {
    out.push_back(v & 0xff);
    out.push_back(v >> 8);
}
inline void put32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back((v >> (8 * i)) & 0xff);
}
inline void put64(std::vector<std::uint8_t>& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back((v >> (8 * i)) & 0xff);
}

class Cursor {
public:
    Cursor(const std::vector<std::uint8_t>& data) : data_(data) {}
    std::uint16_t get16() { return static_cast<std::uint16_t>(get(2)); }
    std::uint32_t get32() { return static_cast<std::uint32_t>(get(4)); }
    std::uint64_t get64() { return get(8); }
    std::uint8_t get8() { return static_cast<std::uint8_t>(get(1)); }
    std::vector<std::uint8_t> bytes(std::size_t k) {
        need(k);
        std::vector<std::uint8_t> out(data_.begin() + pos_, data_.begin() + pos_ + k);
        pos_ += k;
        return out;
    }
    std::size_t remaining() const { return data_.size() - pos_; }

private:
    void need(std::size_t k) const {
        if (pos_ + k > data_.size()) throw ProtocolError("frame body truncated");
    }
    std::uint64_t get(unsigned width) {
        need(width);
        std::uint64_t v = 0;
        for (unsigned i = 0; i < width; ++i) v |= std::uint64_t{data_[pos_ + i]} << (8 * i);
        pos_ += width;
        return v;
    }
    const std::vector<std::uint8_t>& data_;
    std::size_t pos_ = 0;
};

} // namespace wiredetail

// Thin RAII socket with exact read/write and optional byte accounting.
class Socket {
public:
    Socket() = default;
    explicit Socket(int fd) : fd_(fd) {}
    Socket(Socket&& other) noexcept : fd_(other.fd_), sent_(other.sent_), received_(other.received_) {
        other.fd_ = -1;
    }
    Socket& operator=(Socket&& other) noexcept {
        if (this != &other) {
            close_fd();
            fd_ = other.fd_;
            sent_ = other.sent_;
            received_ = other.received_;
            other.fd_ = -1;
        }
        return *this;
    }
    Socket(const Socket&) = delete;
    Socket& operator=(const Socket&) = delete;
    ~Socket() { close_fd(); }

    static Socket connect_to(const std::string& host, std::uint16_t port) {
        addrinfo hints{};
        hints.ai_family = AF_UNSPEC;
        hints.ai_socktype = SOCK_STREAM;
        addrinfo* res = nullptr;
        const std::string port_str = std::to_string(port);
        if (getaddrinfo(host.c_str(), port_str.c_str(), &hints, &res) != 0 || !res)
            throw TransportError("cannot resolve " + host);
        int fd = -1;
        for (addrinfo* ai = res; ai; ai = ai->ai_next) {
            fd = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
            if (fd < 0) continue;
            if (::connect(fd, ai->ai_addr, ai->ai_addrlen) == 0) break;
            ::close(fd);
            fd = -1;
        }
        freeaddrinfo(res);
        if (fd < 0) throw TransportError("cannot connect to " + host + ":" + port_str);
        int one = 1;
        setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
        return Socket(fd);
    }

    bool valid() const { return fd_ >= 0; }
    int fd() const { return fd_; }

    void write_all(const std::uint8_t* data, std::size_t len) {
        std::size_t off = 0;
        while (off < len) {
            const ssize_t k = ::send(fd_, data + off, len - off, MSG_NOSIGNAL);
            if (k <= 0) throw TransportError("socket write failed");
            off += static_cast<std::size_t>(k);
        }
        sent_ += len;
    }

    // Returns false on clean EOF at the first byte.
    bool read_exact(std::uint8_t* data, std::size_t len) {
        std::size_t off = 0;
        while (off < len) {
            const ssize_t k = ::recv(fd_, data + off, len - off, 0);
            if (k == 0) {
                if (off == 0) return false;
                throw TransportError("peer closed mid-frame");
            }
            if (k < 0) throw TransportError("socket read failed");
            off += static_cast<std::size_t>(k);
        }
        received_ += len;
        return true;
    }

    void send_frame(FrameType type, const std::vector<std::uint8_t>& body) {
        std::vector<std::uint8_t> out;
        out.reserve(5 + body.size());
        wiredetail::put32(out, static_cast<std::uint32_t>(1 + body.size()));
        out.push_back(static_cast<std::uint8_t>(type));
        out.insert(out.end(), body.begin(), body.end());
        write_all(out.data(), out.size());
    }

    // Returns false on clean EOF between frames.
    bool recv_frame(Frame& frame) {
        std::uint8_t len_bytes[4];
        if (!read_exact(len_bytes, 4)) return false;
        std::uint32_t len = 0;
        for (int i = 0; i < 4; ++i) len |= std::uint32_t{len_bytes[i]} << (8 * i);
        if (len < 1 || len > kMaxFrameBytes) throw ProtocolError("frame length out of range");
        std::vector<std::uint8_t> payload(len);
        if (!read_exact(payload.data(), len)) throw TransportError("peer closed mid-frame");
        frame.type = static_cast<FrameType>(payload[0]);
        frame.body.assign(payload.begin() + 1, payload.end());
        return true;
    }

    std::uint64_t bytes_sent() const { return sent_; }
    std::uint64_t bytes_received() const { return received_; }

    void shutdown_both() {
        if (fd_ >= 0) ::shutdown(fd_, SHUT_RDWR);
    }

private:
    void close_fd() {
        if (fd_ >= 0) {
            ::close(fd_);
            fd_ = -1;
        }
    }
    int fd_ = -1;
    std::uint64_t sent_ = 0;
    std::uint64_t received_ = 0;
};

class Listener {
public:
    // port 0 binds an ephemeral port; port() reports the actual one.
    Listener(const std::string& host, std::uint16_t port) {
        fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
        if (fd_ < 0) throw TransportError("cannot create listening socket");
        int one = 1;
        setsockopt(fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
        sockaddr_in addr{};
        addr.sin_family = AF_INET;
        addr.sin_port = htons(port);
        if (host.empty() || host == "0.0.0.0") {
            addr.sin_addr.s_addr = INADDR_ANY;
        } else if (inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1) {
            ::close(fd_);
            throw TransportError("listen address must be an IPv4 literal: " + host);
        }
        if (::bind(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0 ||
            ::listen(fd_, 64) != 0) {
            ::close(fd_);
            throw TransportError("cannot bind/listen on " + host + ":" + std::to_string(port));
        }
        sockaddr_in actual{};
        socklen_t len = sizeof actual;
        getsockname(fd_, reinterpret_cast<sockaddr*>(&actual), &len);
        port_ = ntohs(actual.sin_port);
    }
    ~Listener() { close_now(); }
    Listener(const Listener&) = delete;
    Listener& operator=(const Listener&) = delete;

    std::uint16_t port() const { return port_; }

    // Blocks; returns an invalid socket once the listener is closed.
    Socket accept_connection() {
        const int c = ::accept(fd_, nullptr, nullptr);
        if (c < 0) return Socket();
        int one = 1;
        setsockopt(c, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
        return Socket(c);
    }

    void close_now() {
        if (fd_ >= 0) {
            ::shutdown(fd_, SHUT_RDWR);
            ::close(fd_);
            fd_ = -1;
        }
    }

private:
    int fd_ = -1;
    std::uint16_t port_ = 0;
};

} // namespace hubpir
