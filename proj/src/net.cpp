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

#include "ipgate/net.hpp"

#include <algorithm>
#include <cerrno>
#include <cstring>
#include <vector>

#include <arpa/inet.h>
#include <fcntl.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

namespace ipgate {

namespace {

std::string errno_text(int err)
{
    return std::strerror(err);
}

sockaddr_in to_sockaddr(const Endpoint& ep)
{
    sockaddr_in sa{};
    sa.sin_family = AF_INET;
    sa.sin_port = htons(ep.port);
    sa.sin_addr.s_addr = htonl(ep.address.value());
    return sa;
}

Endpoint from_sockaddr(const sockaddr_in& sa)
{
    return Endpoint{Ipv4Address{ntohl(sa.sin_addr.s_addr)}, ntohs(sa.sin_port)};
}

void set_nodelay(int fd)
{
    int one = 1;
    ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
}

} // namespace

void Socket::close() noexcept
{
    if (fd_ >= 0) {
        ::close(fd_);
        fd_ = -1;
    }
}

void Socket::shutdown_write() noexcept
{
    if (fd_ >= 0)
        ::shutdown(fd_, SHUT_WR);
}

void Socket::set_timeouts(std::chrono::milliseconds timeout)
{
    timeval tv{};
    tv.tv_sec = static_cast<time_t>(timeout.count() / 1000);
    tv.tv_usec = static_cast<suseconds_t>((timeout.count() % 1000) * 1000);
    if (::setsockopt(fd_, SOL_SOCKET, SO_RCVTIMEO, &tv, sizeof tv) != 0 ||
        ::setsockopt(fd_, SOL_SOCKET, SO_SNDTIMEO, &tv, sizeof tv) != 0)
        throw IoError(fmt::format("setsockopt timeout: {}", errno_text(errno)));
}

std::size_t Socket::read_some(std::span<char> buf)
{
    for (;;) {
        ssize_t n = ::recv(fd_, buf.data(), buf.size(), 0);
        if (n >= 0)
            return static_cast<std::size_t>(n);
        if (errno == EINTR)
            continue;
        if (errno == EAGAIN || errno == EWOULDBLOCK)
            throw TimeoutError("read timed out");
        throw IoError(fmt::format("recv: {}", errno_text(errno)));
    }
}

void Socket::write_all(std::string_view data)
{
    while (!data.empty()) {
        ssize_t n = ::send(fd_, data.data(), data.size(), MSG_NOSIGNAL);
        if (n < 0) {
            if (errno == EINTR)
                continue;
            if (errno == EAGAIN || errno == EWOULDBLOCK)
                throw TimeoutError("write timed out");
            throw IoError(fmt::format("send: {}", errno_text(errno)));
        }
        data.remove_prefix(static_cast<std::size_t>(n));
    }
}

std::optional<Ipv4Address> resolve_ipv4(std::string_view host)
{
    if (auto literal = Ipv4Address::parse(host))
        return literal;
    addrinfo hints{};
    hints.ai_family = AF_INET;
    hints.ai_socktype = SOCK_STREAM;
    addrinfo* res = nullptr;
    std::string name(host);
    if (getaddrinfo(name.c_str(), nullptr, &hints, &res) != 0 || !res)
        return std::nullopt;
    const auto* sa = reinterpret_cast<const sockaddr_in*>(res->ai_addr);
    Ipv4Address addr{ntohl(sa->sin_addr.s_addr)};
    freeaddrinfo(res);
    return addr;
}

Socket connect_tcp(const Endpoint& to, std::chrono::milliseconds timeout)
{
    Socket sock(::socket(AF_INET, SOCK_STREAM | SOCK_CLOEXEC | SOCK_NONBLOCK, 0));
    if (!sock.valid())
        throw IoError(fmt::format("socket: {}", errno_text(errno)));
    sockaddr_in sa = to_sockaddr(to);
    if (::connect(sock.fd(), reinterpret_cast<const sockaddr*>(&sa), sizeof sa) != 0) {
        if (errno != EINPROGRESS)
            throw IoError(fmt::format("connect {}:{}: {}", to.address.to_string(), to.port, errno_text(errno)));
        pollfd pfd{sock.fd(), POLLOUT, 0};
        int rc;
        do {
            rc = ::poll(&pfd, 1, static_cast<int>(timeout.count()));
        } while (rc < 0 && errno == EINTR);
        if (rc == 0)
            throw TimeoutError(fmt::format("connect {}:{} timed out", to.address.to_string(), to.port));
        int err = 0;
        socklen_t len = sizeof err;
        ::getsockopt(sock.fd(), SOL_SOCKET, SO_ERROR, &err, &len);
        if (rc < 0 || err != 0)
            throw IoError(fmt::format("connect {}:{}: {}", to.address.to_string(), to.port,
                                      errno_text(rc < 0 ? errno : err)));
    }
    int flags = ::fcntl(sock.fd(), F_GETFL);
    ::fcntl(sock.fd(), F_SETFL, flags & ~O_NONBLOCK);
    set_nodelay(sock.fd());
    return sock;
}

bool BufferedReader::fill()
{
    compact();
    std::size_t old = buf_.size();
    buf_.resize(old + chunk_);
    std::size_t n = 0;
    try {
        n = sock_.read_some(std::span<char>(buf_.data() + old, chunk_));
    } catch (...) {
        buf_.resize(old);
        throw;
    }
    high_water_ = std::max(high_water_, buf_.capacity());
    buf_.resize(old + n);
    return n > 0;
}

void BufferedReader::compact()
{
    if (pos_ == 0)
        return;
    buf_.erase(0, pos_);
    pos_ = 0;
}

std::optional<std::string> BufferedReader::read_head(std::size_t limit)
{
    for (;;) {
        std::string_view view(buf_.data() + pos_, buf_.size() - pos_);
        std::size_t end = std::string_view::npos;
        if (std::size_t crlf = view.find("\r\n\r\n"); crlf != std::string_view::npos)
            end = crlf + 4;
        if (std::size_t lflf = view.find("\n\n"); lflf != std::string_view::npos && lflf + 2 < end)
            end = lflf + 2;
        if (end != std::string_view::npos) {
            if (end > limit)
                throw HeadTooLarge("message head too large");
            std::string head(view.substr(0, end));
            pos_ += end;
            return head;
        }
        if (view.size() > limit)
            throw HeadTooLarge("message head too large");
        if (!fill()) {
            if (buffered() == 0)
                return std::nullopt;
            throw IoError("connection closed inside message head");
        }
    }
}

std::string BufferedReader::read_line(std::size_t limit)
{
    for (;;) {
        std::string_view view(buf_.data() + pos_, buf_.size() - pos_);
        if (std::size_t lf = view.find('\n'); lf != std::string_view::npos) {
            std::string line(view.substr(0, lf));
            if (!line.empty() && line.back() == '\r')
                line.pop_back();
            pos_ += lf + 1;
            return line;
        }
        if (view.size() > limit)
            throw IoError("line too long");
        if (!fill())
            throw IoError("connection closed inside a line");
    }
}

std::size_t BufferedReader::read_some(std::span<char> out)
{
    if (buffered() > 0) {
        std::size_t n = std::min(out.size(), buffered());
        std::memcpy(out.data(), buf_.data() + pos_, n);
        pos_ += n;
        if (pos_ == buf_.size()) {
            buf_.clear();
            pos_ = 0;
        }
        return n;
    }
    return sock_.read_some(out);
}

std::string BufferedReader::read_exact(std::size_t n)
{
    std::string out(n, '\0');
    std::size_t got = 0;
    while (got < n) {
        std::size_t r = read_some(std::span<char>(out.data() + got, n - got));
        if (r == 0)
            throw IoError("connection closed early");
        got += r;
    }
    return out;
}

std::optional<Endpoint> parse_proxy_v1(std::string_view line)
{
    if (line.ends_with("\r\n"))
        line.remove_suffix(2);
    std::vector<std::string_view> parts;
    while (!line.empty()) {
        std::size_t sp = line.find(' ');
        parts.push_back(line.substr(0, sp));
        if (sp == std::string_view::npos)
            break;
        line.remove_prefix(sp + 1);
    }
    if (parts.size() != 6 || parts[0] != "PROXY" || parts[1] != "TCP4")
        return std::nullopt;
    auto port = [](std::string_view text) -> std::optional<std::uint16_t> {
        unsigned v = 0;
        for (char c : text) {
            if (c < '0' || c > '9')
                return std::nullopt;
            v = v * 10 + static_cast<unsigned>(c - '0');
            if (v > 65535)
                return std::nullopt;
        }
        if (text.empty())
            return std::nullopt;
        return static_cast<std::uint16_t>(v);
    };
    auto src = Ipv4Address::parse(parts[2]);
    auto dst = Ipv4Address::parse(parts[3]);
    auto src_port = port(parts[4]);
    if (!src || !dst || !src_port || !port(parts[5]))
        return std::nullopt;
    return Endpoint{*src, *src_port};
}

std::string format_proxy_v1(const Endpoint& source, const Endpoint& destination)
{
    return fmt::format("PROXY TCP4 {} {} {} {}\r\n", source.address.to_string(), destination.address.to_string(),
                       source.port, destination.port);
}

TcpServer::TcpServer(std::string bind_address, std::uint16_t port, bool proxy_protocol, Handler handler)
    : bind_address_(std::move(bind_address)), requested_port_(port), proxy_protocol_(proxy_protocol),
      handler_(std::move(handler))
{
}

TcpServer::~TcpServer()
{
    stop();
}

void TcpServer::start()
{
    auto addr = Ipv4Address::from_string(bind_address_);
    Socket sock(::socket(AF_INET, SOCK_STREAM | SOCK_CLOEXEC, 0));
    if (!sock.valid())
        throw IoError(fmt::format("socket: {}", errno_text(errno)));
    int one = 1;
    ::setsockopt(sock.fd(), SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    sockaddr_in sa = to_sockaddr(Endpoint{addr, requested_port_});
    if (::bind(sock.fd(), reinterpret_cast<const sockaddr*>(&sa), sizeof sa) != 0)
        throw IoError(fmt::format("bind {}:{}: {}", bind_address_, requested_port_, errno_text(errno)));
    if (::listen(sock.fd(), SOMAXCONN) != 0)
        throw IoError(fmt::format("listen: {}", errno_text(errno)));
    sockaddr_in bound{};
    socklen_t len = sizeof bound;
    ::getsockname(sock.fd(), reinterpret_cast<sockaddr*>(&bound), &len);
    bound_port_ = ntohs(bound.sin_port);
    listener_ = std::move(sock);
    stopping_ = false;
    acceptor_ = std::thread([this] { accept_loop(); });
}

void TcpServer::accept_loop()
{
    while (!stopping_) {
        sockaddr_in peer{};
        socklen_t len = sizeof peer;
        int fd = ::accept4(listener_.fd(), reinterpret_cast<sockaddr*>(&peer), &len, SOCK_CLOEXEC);
        if (fd < 0) {
            if (stopping_)
                break;
            if (errno == EINTR || errno == ECONNABORTED)
                continue;
            if (errno == EMFILE || errno == ENFILE) {
                std::this_thread::sleep_for(std::chrono::milliseconds(50));
                continue;
            }
            spdlog::error("accept: {}", errno_text(errno));
            break;
        }
        ++accepted_;
        {
            std::lock_guard lock(mutex_);
            if (stopping_) {
                ::close(fd);
                break;
            }
            live_fds_.insert(fd);
            ++live_threads_;
        }
        std::thread([this, fd, ep = from_sockaddr(peer)] { serve(fd, ep); }).detach();
    }
}

void TcpServer::serve(int fd, Endpoint peer)
{
    Socket sock(fd);
    set_nodelay(fd);
    try {
        PeerInfo info{peer, peer};
        bool ok = true;
        if (proxy_protocol_) {
            sock.set_timeouts(std::chrono::seconds(5));
            std::string line;
            char c = 0;
            // v1 lines are at most 107 bytes
            while (line.size() < 108 && sock.read_some(std::span<char>(&c, 1)) == 1) {
                line.push_back(c);
                if (c == '\n')
                    break;
            }
            auto src = parse_proxy_v1(line);
            if (src) {
                info.source = *src;
            } else {
                spdlog::warn("dropping connection from {} without a valid PROXY header",
                             peer.address.to_string());
                ok = false;
            }
            sock.set_timeouts(std::chrono::milliseconds(0));
        }
        if (ok)
            handler_(sock, info);
    } catch (const std::exception& e) {
        spdlog::debug("connection from {} ended: {}", peer.address.to_string(), e.what());
    }
    {
        std::lock_guard lock(mutex_);
        live_fds_.erase(fd);
    }
    sock.close();
    std::lock_guard lock(mutex_);
    --live_threads_;
    drained_.notify_all();
}

void TcpServer::stop()
{
    if (!listener_.valid())
        return;
    stopping_ = true;
    ::shutdown(listener_.fd(), SHUT_RDWR);
    if (acceptor_.joinable())
        acceptor_.join();
    listener_.close();
    std::unique_lock lock(mutex_);
    for (int fd : live_fds_)
        ::shutdown(fd, SHUT_RDWR);
    drained_.wait(lock, [this] { return live_threads_ == 0; });
}

std::size_t TcpServer::active_connections() const
{
    std::lock_guard lock(mutex_);
    return live_threads_;
}

} // namespace ipgate
