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

// The intercepting proxy.
//
// Clients never know the proxy exists: the gateway redirects their port 80
// traffic here, so requests arrive in origin-form with the site named only
// by the Host header. Each request is rebuilt into an absolute URI, judged
// by the AclEngine against the connection's source address, and then either
// relayed to the origin (streamed, never cached) or answered with a 403 page
// that links to the login portal.

#pragma once

#include "ipgate/acl.hpp"
#include "ipgate/clock.hpp"
#include "ipgate/http.hpp"
#include "ipgate/net.hpp"

#include <atomic>
#include <chrono>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>

namespace ipgate {

class UpstreamResolver {
public:
    virtual ~UpstreamResolver() = default;
    /// nullopt when the name does not resolve.
    virtual std::optional<Endpoint> resolve(std::string_view host, std::uint16_t port) = 0;
};

/// getaddrinfo, IPv4 results only.
class DnsResolver final : public UpstreamResolver {
public:
    std::optional<Endpoint> resolve(std::string_view host, std::uint16_t port) override;
};

/// Fixed host table, used to point simulated sites at local stub origins.
class StaticResolver final : public UpstreamResolver {
public:
    void add(std::string host, Endpoint target);
    /// Target for hosts not in the table.
    void set_fallback(Endpoint target);
    std::optional<Endpoint> resolve(std::string_view host, std::uint16_t port) override;

private:
    std::mutex mutex_;
    std::map<std::string, Endpoint, std::less<>> table_;
    std::optional<Endpoint> fallback_;
};

struct AccessLogEntry {
    TimePoint time;
    Ipv4Address client_ip;
    std::optional<VerdictAction> verdict;
    std::optional<std::string> user;
    std::string method;
    std::string uri;
    int status = 0;
    std::uint64_t bytes = 0;
};

/// timestamp client-ip verdict user-or-dash method uri status bytes
std::string format_access_log_line(const AccessLogEntry& entry);

class AccessLog {
public:
    using Observer = std::function<void(const AccessLogEntry&)>;

    /// `out` may be null to only notify the observer.
    explicit AccessLog(std::ostream* out = nullptr) : out_(out) {}

    void record(const AccessLogEntry& entry);
    void set_observer(Observer observer);

private:
    std::mutex mutex_;
    std::ostream* out_;
    Observer observer_;
};

/// HTML body for a 403. For DenyNeedsLogin it links to
/// login_url?return=<encoded absolute URI>.
std::string render_deny_page(const Verdict& verdict, const HttpRequestSummary& request, std::string_view login_url);

std::string render_error_page(int status, std::string_view detail);

class UpstreamError : public std::runtime_error {
public:
    enum class Reason { Dns, Connect, Timeout, Protocol };

    UpstreamError(Reason reason, const std::string& what) : std::runtime_error(what), reason_(reason) {}
    Reason reason() const noexcept { return reason_; }

private:
    Reason reason_;
};

std::string_view to_string(UpstreamError::Reason reason) noexcept;

/// An open connection to an origin. Socket and reader are heap-held so the
/// reader's reference survives moves.
struct UpstreamConnection {
    Endpoint endpoint;
    std::unique_ptr<Socket> socket;
    std::unique_ptr<BufferedReader> reader;

    explicit operator bool() const noexcept { return socket != nullptr; }
};

/// An origin response whose head has been read and whose body is still on
/// the wire.
struct UpstreamResponse {
    UpstreamConnection connection;
    ResponseHead head;
    BodyFraming framing;
    bool reused = false; ///< sent on an idle connection rather than a new one

    /// Whether the connection can carry another request once the body has
    /// been read in full.
    bool reusable() const;
};

/// Sends the request in origin-form with hop-by-hop headers removed and a
/// Via header added, streams the client's body, and reads the final response
/// head. A bodiless request goes over `idle` when it leads to the same
/// origin, falling back to a new connection if the origin has dropped it.
/// Throws UpstreamError.
UpstreamResponse forward_request(const HttpRequestSummary& request, const RequestHead& client_head,
                                 BufferedReader& client_body, const BodyFraming& body_framing,
                                 UpstreamResolver& resolver, std::chrono::milliseconds timeout,
                                 UpstreamConnection idle = {});

struct ProxyOptions {
    std::string listen_address = "0.0.0.0";
    std::uint16_t listen_port = 3128;
    std::string login_url;
    std::chrono::milliseconds upstream_timeout{10'000};
    std::chrono::milliseconds client_idle_timeout{60'000};
    bool proxy_protocol = false;
    std::size_t max_head_bytes = 64 * 1024;
};

struct ProxyStats {
    std::uint64_t requests = 0;
    std::uint64_t upstream_connections = 0;
    std::size_t peak_buffer_bytes = 0;
};

class ProxyServer {
public:
    ProxyServer(ProxyOptions options, AclEngine& engine, const Clock& clock, UpstreamResolver& resolver,
                AccessLog& log);
    ~ProxyServer();

    void start();
    void stop();
    std::uint16_t port() const noexcept { return server_.port(); }
    ProxyStats stats() const noexcept;

    /// Serves every request on one client connection until it closes.
    void handle_connection(Socket& client, const PeerInfo& peer);

private:
    bool is_portal_target(const HttpRequestSummary& s) const;
    void note_buffer(std::size_t bytes);

    ProxyOptions options_;
    AclEngine& engine_;
    const Clock& clock_;
    UpstreamResolver& resolver_;
    AccessLog& log_;
    std::optional<AbsoluteUri> portal_;
    TcpServer server_;

    std::atomic<std::uint64_t> requests_{0};
    std::atomic<std::uint64_t> upstream_connections_{0};
    std::atomic<std::size_t> peak_buffer_{0};
};

} // namespace ipgate
