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

// In-process testbed for the two deployment topologies.
//
// Type 1 puts the proxy on the gateway; Type 2 routes port 80 traffic from
// the gateway to a proxy on another host. Both keep the client's own source
// address, so the proxy judges each client separately. Type2NatBroken models
// a gateway that rewrites source addresses before forwarding: the proxy then
// sees the gateway's address for everyone and one login unlocks all clients.
//
// Simulated clients talk to the real proxy and login servers over loopback.
// The address a gateway would deliver is passed in a PROXY v1 line, which
// both servers are configured to trust. Origin sites resolve to a local
// stub origin that serves deterministic bodies.

#pragma once

#include "ipgate/acl.hpp"
#include "ipgate/auth_service.hpp"
#include "ipgate/clock.hpp"
#include "ipgate/credentials.hpp"
#include "ipgate/proxy.hpp"
#include "ipgate/session_store.hpp"

#include <atomic>
#include <chrono>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace ipgate::harness {

/// Byte i of a deterministic body is a function of (i, seed) only.
std::string deterministic_bytes(std::size_t n, std::uint32_t seed = 0);

/// Body the stub origin serves for any path without a special prefix.
std::string default_body(std::string_view host, std::string_view path);

/// Local origin server.
///
///   /bytes/<n>    n deterministic bytes, Content-Length framing
///   /chunked/<n>  n deterministic bytes, chunked framing
///   /drop/<n>     announces n bytes, sends half, then closes
///   /slow/<ms>    waits ms milliseconds before answering
///   /echo         echoes the received request head as text/plain
///   anything else default_body(host, path)
class StubOrigin {
public:
    StubOrigin();
    ~StubOrigin();

    void start();
    void stop();
    Endpoint endpoint() const;

    std::uint64_t connections() const noexcept { return server_.accepted_connections(); }
    std::uint64_t requests() const noexcept { return requests_.load(); }

private:
    void serve(Socket& sock, const PeerInfo& peer);

    TcpServer server_;
    std::atomic<std::uint64_t> requests_{0};
};

struct HttpResult {
    int status = 0;
    HeaderMap headers;
    std::string body;
};

/// Blocking HTTP/1.1 client for tests and the harness. When `source` is set
/// the connection opens with a PROXY v1 line naming it.
class HttpClient {
public:
    HttpClient(Endpoint server, std::optional<Ipv4Address> source = std::nullopt,
               std::chrono::milliseconds timeout = std::chrono::seconds(15));

    /// Sends a raw request and reads one response. Reconnects if the previous
    /// response closed the connection.
    HttpResult exchange(std::string_view raw_request, std::string_view method = "GET");

    /// GET in origin-form, as a browser that believes it talks to the origin.
    HttpResult get(std::string_view absolute_uri);

    HttpResult post_form(std::string_view host, std::string_view path, std::string_view form_body,
                         std::string_view accept = "text/html");

    void close();

private:
    void connect();

    Endpoint server_;
    std::optional<Ipv4Address> source_;
    std::chrono::milliseconds timeout_;
    Socket sock_;
    std::unique_ptr<BufferedReader> reader_;
};

struct TestUser {
    std::string name;
    std::string password;
    std::vector<std::string> groups;
};

struct TestbedOptions {
    AclPolicy policy;
    SessionDefaults session;
    std::vector<TestUser> users;
    TimePoint start{Seconds{1'700'000'000}};
    std::string store_locator = "memory:";
    std::chrono::milliseconds upstream_timeout{10'000};
};

/// Proxy, login service, session store and stub origin wired together.
class Testbed {
public:
    explicit Testbed(TestbedOptions options);
    ~Testbed();

    ManualClock& clock() noexcept { return clock_; }
    SessionStore& store() noexcept { return *store_; }
    AclEngine& engine() noexcept { return *engine_; }
    StubOrigin& origin() noexcept { return origin_; }
    StaticResolver& resolver() noexcept { return resolver_; }
    ProxyServer& proxy() noexcept { return *proxy_; }
    AuthServer& auth_server() noexcept { return *auth_server_; }
    const std::string& login_url() const noexcept { return login_url_; }

    Endpoint proxy_endpoint() const;
    Endpoint auth_endpoint() const;

    /// What the proxy would see from `apparent_source`.
    HttpResult request(Ipv4Address apparent_source, std::string_view absolute_uri);
    HttpResult login(Ipv4Address apparent_source, std::string_view user, std::string_view password, Seconds duration,
                     std::string_view return_url = {});
    HttpResult logout(Ipv4Address apparent_source);
    HttpResult status(Ipv4Address apparent_source);

    /// Access log entries recorded since the previous call.
    std::vector<AccessLogEntry> take_log();

private:
    TestbedOptions options_;
    ManualClock clock_;
    std::unique_ptr<SessionStore> store_;
    std::unique_ptr<FlatFileBackend> backend_;
    std::unique_ptr<AclEngine> engine_;
    StubOrigin origin_;
    StaticResolver resolver_;
    AccessLog log_;
    std::mutex log_mutex_;
    std::vector<AccessLogEntry> pending_log_;
    std::unique_ptr<AuthService> auth_;
    std::unique_ptr<AuthServer> auth_server_;
    std::string login_url_;
    std::unique_ptr<ProxyServer> proxy_;
};

enum class TopologyKind { Type1, Type2, Type2NatBroken };

std::string_view to_string(TopologyKind kind) noexcept;

struct SimClient {
    std::string name;
    Ipv4Address ip;
};

struct Topology {
    TopologyKind kind = TopologyKind::Type1;
    std::vector<SimClient> clients;
    Ipv4Address gateway_ip{0x0a000001}; // 10.0.0.1

    /// Throws std::invalid_argument on duplicate clients or a client using
    /// the gateway address.
    void validate() const;
    const SimClient* find(std::string_view name) const;
    /// Source address the proxy receives for traffic from `client`.
    Ipv4Address apparent_source(const SimClient& client) const;
};

enum class ActionKind { Request, Login, Logout, AdvanceClock };

struct ScenarioAction {
    ActionKind kind = ActionKind::Request;
    std::string client;
    std::string uri; ///< normalised absolute URI (Request)
    std::string user;
    std::string password;
    Seconds seconds{0}; ///< login duration or clock advance
    int parallel_group = -1;
    int line = 0;
};

struct Scenario {
    Topology topology;
    AclPolicy policy;
    SessionDefaults session;
    std::vector<TestUser> users;
    std::vector<ScenarioAction> actions;
};

class ScenarioError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Line-based script grammar (see docs/harness.md). Unknown clients and
/// malformed lines are rejected before anything runs.
Scenario parse_scenario(std::istream& in);

struct TranscriptEntry {
    std::size_t seq = 0;
    TimePoint time;
    std::string client; ///< "-" for clock actions
    Ipv4Address client_ip;
    ActionKind action = ActionKind::Request;
    std::string uri;
    int status = 0;
    std::optional<VerdictAction> verdict;
    std::optional<Ipv4Address> seen_ip; ///< source address the proxy judged
    std::string body;
};

using ScenarioTranscript = std::vector<TranscriptEntry>;

std::string format_transcript_line(const TranscriptEntry& entry);

/// Runs the actions in order against `testbed` (parallel groups
/// concurrently) and records what each client observed.
ScenarioTranscript run_scenario(const Topology& topology, std::span<const ScenarioAction> actions, Testbed& testbed);

/// Builds a testbed from the scenario's settings and runs it.
ScenarioTranscript run_scenario(const Scenario& scenario);

struct BenchOptions {
    int clients = 25;
    int requests_per_client = 200;
    bool warm = true;
    std::string path = "/bytes/512";
};

struct LatencySummary {
    std::size_t samples = 0;
    std::size_t errors = 0;
    double direct_p50_ms = 0;
    double direct_p95_ms = 0;
    double proxy_p50_ms = 0;
    double proxy_p95_ms = 0;
    double overhead_p50_ms = 0;
    double overhead_p95_ms = 0;
    double elapsed_s = 0;
    std::uint64_t store_lookups = 0;
    std::uint64_t cache_hits = 0;
};

/// Concurrent clients, each on a keep-alive connection, time every request
/// first directly against the stub origin and then through the proxy.
/// Clients are logged in beforehand. warm=false disables the decision cache
/// so every request reaches the session store.
LatencySummary bench_latency(const BenchOptions& options);

/// Nearest-rank percentile of an unsorted sample, p in [0, 100].
double percentile(std::vector<double> samples, double p);

std::string format_summary(const LatencySummary& summary);

} // namespace ipgate::harness
