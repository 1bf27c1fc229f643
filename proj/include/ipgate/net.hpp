// Copyright 2026 The ipgate Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include "ipgate/ipv4.hpp"

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <mutex>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <unordered_set>
#include <utility>

namespace ipgate {

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class TimeoutError : public IoError {
public:
    using IoError::IoError;
};

/// Owning file descriptor for a TCP socket.
class Socket {
public:
    Socket() = default;
    explicit Socket(int fd) noexcept : fd_(fd) {}
    ~Socket() { close(); }
    Socket(Socket&& o) noexcept : fd_(std::exchange(o.fd_, -1)) {}
    Socket& operator=(Socket&& o) noexcept
    {
        if (this != &o) {
            close();
            fd_ = std::exchange(o.fd_, -1);
        }
        return *this;
    }
    Socket(const Socket&) = delete;
    Socket& operator=(const Socket&) = delete;

    int fd() const noexcept { return fd_; }
    bool valid() const noexcept { return fd_ >= 0; }
    void close() noexcept;
    void shutdown_write() noexcept;

    /// Send and receive timeouts; zero means block forever.
    void set_timeouts(std::chrono::milliseconds timeout);

    /// Returns bytes read, 0 at EOF. Throws TimeoutError / IoError.
    std::size_t read_some(std::span<char> buf);
    void write_all(std::string_view data);

private:
    int fd_ = -1;
};

struct Endpoint {
    Ipv4Address address;
    std::uint16_t port = 0;

    bool operator==(const Endpoint&) const = default;
};

/// IPv4 literal or getaddrinfo lookup; nullopt when the name does not resolve.
std::optional<Ipv4Address> resolve_ipv4(std::string_view host);

/// Connects with a deadline. Throws TimeoutError or IoError.
Socket connect_tcp(const Endpoint& to, std::chrono::milliseconds timeout);

/// Reads from a socket through an internal buffer that never grows past
/// what one head or one read needs. Tracks the largest size it reached.
class BufferedReader {
public:
    explicit BufferedReader(Socket& sock, std::size_t chunk = 16 * 1024) : sock_(sock), chunk_(chunk) {}

    /// Head terminated by CRLFCRLF (bare LFLF accepted). Returns nullopt on
    /// EOF before any byte. Throws HeadTooLarge past `limit` bytes, IoError
    /// on EOF mid-head.
    std::optional<std::string> read_head(std::size_t limit);

    /// One line without its terminator. Throws IoError on EOF or past limit.
    std::string read_line(std::size_t limit);

    /// Buffered bytes first, then the socket. 0 at EOF.
    std::size_t read_some(std::span<char> buf);

    /// Exactly n bytes into a string. Throws IoError on early EOF.
    std::string read_exact(std::size_t n);

    std::size_t buffered() const noexcept { return buf_.size() - pos_; }
    std::size_t high_water() const noexcept { return high_water_; }

private:
    bool fill();
    void compact();

    Socket& sock_;
    std::size_t chunk_;
    std::string buf_;
    std::size_t pos_ = 0;
    std::size_t high_water_ = 0;
};

class HeadTooLarge : public IoError {
public:
    using IoError::IoError;
};

/// Parses a PROXY protocol v1 line ("PROXY TCP4 src dst sport dport") and
/// returns the source. nullopt for anything else, including TCP6/UNKNOWN.
std::optional<Endpoint> parse_proxy_v1(std::string_view line);

std::string format_proxy_v1(const Endpoint& source, const Endpoint& destination);

struct PeerInfo {
    Endpoint source;   ///< the client as this server should judge it
    Endpoint accepted; ///< the TCP peer that actually connected
};

/// Thread-per-connection TCP server. With proxy_protocol set, every
/// connection must open with a PROXY v1 line naming the original source;
/// connections without one are dropped.
class TcpServer {
public:
    using Handler = std::function<void(Socket&, const PeerInfo&)>;

    TcpServer(std::string bind_address, std::uint16_t port, bool proxy_protocol, Handler handler);
    ~TcpServer();
    TcpServer(const TcpServer&) = delete;
    TcpServer& operator=(const TcpServer&) = delete;

    /// Binds and starts accepting. Throws IoError if the bind fails.
    void start();
    /// Stops accepting, shuts down live connections and waits for handlers.
    void stop();

    std::uint16_t port() const noexcept { return bound_port_; }
    std::size_t active_connections() const;
    std::uint64_t accepted_connections() const noexcept { return accepted_.load(); }

private:
    void accept_loop();
    void serve(int fd, Endpoint peer);

    std::string bind_address_;
    std::uint16_t requested_port_;
    bool proxy_protocol_;
    Handler handler_;

    Socket listener_;
    std::uint16_t bound_port_ = 0;
    std::thread acceptor_;
    std::atomic<bool> stopping_{false};
    std::atomic<std::uint64_t> accepted_{0};

    mutable std::mutex mutex_;
    std::condition_variable drained_;
    std::unordered_set<int> live_fds_;
    std::size_t live_threads_ = 0;
};

} // namespace ipgate
