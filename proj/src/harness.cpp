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


#include "ipgate/harness.hpp"

#include "ipgate/uri.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <future>
#include <istream>
#include <sstream>
#include <thread>

namespace ipgate::harness {

namespace {

constexpr std::size_t kHeadLimit = 64 * 1024;
constexpr std::size_t kBodyLimit = 64 * 1024 * 1024;
constexpr std::size_t kPiece = 64 * 1024;
constexpr std::string_view kPortalHost = "login.ipgate.test";

char byte_at(std::size_t i, std::uint32_t seed)
{
    std::uint32_t x = static_cast<std::uint32_t>(i) * 2654435761u + seed * 40503u;
    return static_cast<char>((x >> 13) & 0xff);
}

std::string bytes_from(std::size_t offset, std::size_t n)
{
    std::string out(n, '\0');
    for (std::size_t i = 0; i < n; ++i)
        out[i] = byte_at(offset + i, 0);
    return out;
}

std::optional<std::uint64_t> number_after(std::string_view path, std::string_view prefix)
{
    if (!path.starts_with(prefix))
        return std::nullopt;
    std::string_view rest = path.substr(prefix.size());
    std::uint64_t n = 0;
    auto [ptr, ec] = std::from_chars(rest.data(), rest.data() + rest.size(), n);
    if (ec != std::errc{} || ptr != rest.data() + rest.size())
        return std::nullopt;
    return n;
}

std::atomic<std::uint16_t> next_source_port{20000};

} // namespace

std::string deterministic_bytes(std::size_t n, std::uint32_t seed)
{
    std::string out(n, '\0');
    for (std::size_t i = 0; i < n; ++i)
        out[i] = byte_at(i, seed);
    return out;
}

std::string default_body(std::string_view host, std::string_view path)
{
    return fmt::format("origin {}{}\n", host, path);
}

// --- StubOrigin -------------------------------------------------------------

StubOrigin::StubOrigin()
    : server_("127.0.0.1", 0, false, [this](Socket& s, const PeerInfo& p) { serve(s, p); })
{
}

StubOrigin::~StubOrigin() { stop(); }

void StubOrigin::start() { server_.start(); }
void StubOrigin::stop() { server_.stop(); }

Endpoint StubOrigin::endpoint() const { return Endpoint{Ipv4Address{0x7f000001}, server_.port()}; }

void StubOrigin::serve(Socket& sock, const PeerInfo&)
{
    sock.set_timeouts(std::chrono::seconds(30));
    BufferedReader reader(sock);
    try {
        for (;;) {
            auto raw = reader.read_head(kHeadLimit);
            if (!raw)
                return;
            RequestHead req = parse_request_head(*raw);
            read_body(reader, request_framing(req), kBodyLimit);
            ++requests_;

            const bool keep_alive = wants_keep_alive(req);
            const bool head_only = req.method == "HEAD";
            std::string path = req.target;
            std::string host(req.headers.get("Host").value_or(""));

            ResponseHead res;
            res.version = "HTTP/1.1";
            res.status = 200;
            res.reason = "OK";
            if (!keep_alive)
                res.headers.add("Connection", "close");

            auto send_head = [&] { sock.write_all(serialize(res)); };

            if (auto n = number_after(path, "/bytes/")) {
                res.headers.add("Content-Type", "application/octet-stream");
                res.headers.add("Content-Length", std::to_string(*n));
                send_head();
                for (std::uint64_t off = 0; !head_only && off < *n; off += kPiece)
                    sock.write_all(bytes_from(off, std::min<std::uint64_t>(kPiece, *n - off)));
            } else if (auto n = number_after(path, "/chunked/")) {
                res.headers.add("Content-Type", "application/octet-stream");
                res.headers.add("Transfer-Encoding", "chunked");
                send_head();
                if (!head_only) {
                    for (std::uint64_t off = 0; off < *n; off += 4096) {
                        std::size_t len = std::min<std::uint64_t>(4096, *n - off);
                        sock.write_all(fmt::format("{:x}\r\n", len));
                        sock.write_all(bytes_from(off, len));
                        sock.write_all("\r\n");
                    }
                    sock.write_all("0\r\n\r\n");
                }
            } else if (auto n = number_after(path, "/drop/")) {
                res.headers.add("Content-Type", "application/octet-stream");
                res.headers.add("Content-Length", std::to_string(*n));
                send_head();
                sock.write_all(bytes_from(0, *n / 2));
                sock.shutdown_write();
                return;
            } else {
                std::string body;
                if (path == "/echo") {
                    body = *raw;
                    res.headers.add("Content-Type", "text/plain");
                } else {
                    if (auto ms = number_after(path, "/slow/"))
                        std::this_thread::sleep_for(std::chrono::milliseconds(*ms));
                    body = default_body(host, path);
                    res.headers.add("Content-Type", "text/plain; charset=utf-8");
                }
                res.headers.add("Content-Length", std::to_string(body.size()));
                send_head();
                if (!head_only)
                    sock.write_all(body);
            }
            if (!keep_alive)
                return;
        }
    } catch (const std::exception&) {
        // Peer went away or sent garbage; nothing to report.
    }
}

// --- HttpClient -------------------------------------------------------------

HttpClient::HttpClient(Endpoint server, std::optional<Ipv4Address> source, std::chrono::milliseconds timeout)
    : server_(server), source_(source), timeout_(timeout)
{
}

void HttpClient::connect()
{
    reader_.reset();
    sock_ = connect_tcp(server_, timeout_);
    sock_.set_timeouts(timeout_);
    if (source_)
        sock_.write_all(format_proxy_v1(Endpoint{*source_, next_source_port.fetch_add(1)}, server_));
    reader_ = std::make_unique<BufferedReader>(sock_);
}

void HttpClient::close()
{
    reader_.reset();
    sock_.close();
}

HttpResult HttpClient::exchange(std::string_view raw_request, std::string_view method)
{
    bool reused = sock_.valid();
    for (int attempt = 0;; ++attempt) {
        if (!sock_.valid())
            connect();
        try {
            sock_.write_all(raw_request);
            auto raw = reader_->read_head(kHeadLimit);
            if (!raw)
                throw IoError("connection closed before response");
            ResponseHead head = parse_response_head(*raw);
            BodyFraming framing = response_framing(method, head);
            HttpResult result;
            result.status = head.status;
            result.body = read_body(*reader_, framing, kBodyLimit);
            bool closing = framing.kind == BodyKind::UntilClose || head.headers.has_token("Connection", "close") ||
                           head.version == "HTTP/1.0";
            result.headers = std::move(head.headers);
            if (closing)
                close();
            return result;
        } catch (const IoError&) {
            close();
            // A kept-alive connection may have been closed by the server
            // while idle; retry once on a fresh one.
            if (!reused || attempt > 0)
                throw;
        }
    }
}

HttpResult HttpClient::get(std::string_view absolute_uri)
{
    auto uri = parse_absolute_uri(absolute_uri);
    if (!uri)
        throw std::invalid_argument(fmt::format("not an http URI: {}", absolute_uri));
    std::string host = uri->port == 80 ? uri->host : fmt::format("{}:{}", uri->host, uri->port);
    return exchange(fmt::format("GET {} HTTP/1.1\r\nHost: {}\r\nUser-Agent: ipgate-harness\r\n\r\n", uri->path, host));
}

HttpResult HttpClient::post_form(std::string_view host, std::string_view path, std::string_view form_body,
                                 std::string_view accept)
{
    return exchange(fmt::format("POST {} HTTP/1.1\r\nHost: {}\r\nAccept: {}\r\n"
                                "Content-Type: application/x-www-form-urlencoded\r\nContent-Length: {}\r\n\r\n{}",
                                path, host, accept, form_body.size(), form_body),
                    "POST");
}

// --- Testbed ----------------------------------------------------------------

Testbed::Testbed(TestbedOptions options) : options_(std::move(options)), clock_(options_.start)
{
    store_ = open_session_store(options_.store_locator, StoreOptions{options_.session.inactivity});

    std::vector<CredentialRecord> records;
    for (const TestUser& u : options_.users)
        records.push_back(CredentialRecord{u.name, hash_password(u.password, 1000), u.groups});
    backend_ = std::make_unique<FlatFileBackend>(std::move(records));
    engine_ = std::make_unique<AclEngine>(options_.policy, *store_);

    origin_.start();
    resolver_.set_fallback(origin_.endpoint());
    log_.set_observer([this](const AccessLogEntry& e) {
        std::lock_guard lock(log_mutex_);
        pending_log_.push_back(e);
    });

    auth_ = std::make_unique<AuthService>(*backend_, *store_, options_.session);
    auth_->set_login_listener([this](Ipv4Address ip) { engine_->forget(ip); });
    AuthServerOptions auth_options;
    auth_options.listen_address = "127.0.0.1";
    auth_options.listen_port = 0;
    auth_options.proxy_protocol = true;
    auth_server_ = std::make_unique<AuthServer>(auth_options, *auth_, clock_);
    auth_server_->start();
    login_url_ = fmt::format("http://{}:{}/login", kPortalHost, auth_server_->port());

    ProxyOptions proxy_options;
    proxy_options.listen_address = "127.0.0.1";
    proxy_options.listen_port = 0;
    proxy_options.login_url = login_url_;
    proxy_options.upstream_timeout = options_.upstream_timeout;
    proxy_options.proxy_protocol = true;
    proxy_ = std::make_unique<ProxyServer>(proxy_options, *engine_, clock_, resolver_, log_);
    proxy_->start();
}

Testbed::~Testbed()
{
    proxy_->stop();
    auth_server_->stop();
    origin_.stop();
}

Endpoint Testbed::proxy_endpoint() const { return Endpoint{Ipv4Address{0x7f000001}, proxy_->port()}; }
Endpoint Testbed::auth_endpoint() const { return Endpoint{Ipv4Address{0x7f000001}, auth_server_->port()}; }

HttpResult Testbed::request(Ipv4Address apparent_source, std::string_view absolute_uri)
{
    HttpClient client(proxy_endpoint(), apparent_source);
    return client.get(absolute_uri);
}

HttpResult Testbed::login(Ipv4Address apparent_source, std::string_view user, std::string_view password,
                          Seconds duration, std::string_view return_url)
{
    std::string form = fmt::format("user={}&password={}&duration={}", url_encode(user), url_encode(password),
                                   duration.count());
    if (!return_url.empty())
        form += "&return=" + url_encode(return_url);
    HttpClient client(auth_endpoint(), apparent_source);
    return client.post_form(kPortalHost, "/login", form);
}

HttpResult Testbed::logout(Ipv4Address apparent_source)
{
    HttpClient client(auth_endpoint(), apparent_source);
    return client.post_form(kPortalHost, "/logout", "");
}

HttpResult Testbed::status(Ipv4Address apparent_source)
{
    HttpClient client(auth_endpoint(), apparent_source);
    return client.exchange(fmt::format("GET /status HTTP/1.1\r\nHost: {}\r\n\r\n", kPortalHost));
}

std::vector<AccessLogEntry> Testbed::take_log()
{
    std::lock_guard lock(log_mutex_);
    return std::exchange(pending_log_, {});
}

// --- Topology ---------------------------------------------------------------

std::string_view to_string(TopologyKind kind) noexcept
{
    switch (kind) {
    case TopologyKind::Type1:
        return "type1";
    case TopologyKind::Type2:
        return "type2";
    case TopologyKind::Type2NatBroken:
        return "type2-nat-broken";
    }
    return "?";
}

void Topology::validate() const
{
    for (std::size_t i = 0; i < clients.size(); ++i) {
        if (clients[i].ip == gateway_ip)
            throw std::invalid_argument(fmt::format("client {} uses the gateway address", clients[i].name));
        for (std::size_t j = 0; j < i; ++j) {
            if (clients[j].name == clients[i].name)
                throw std::invalid_argument(fmt::format("duplicate client {}", clients[i].name));
            if (clients[j].ip == clients[i].ip)
                throw std::invalid_argument(fmt::format("clients {} and {} share an address", clients[j].name,
                                                        clients[i].name));
        }
    }
}

const SimClient* Topology::find(std::string_view name) const
{
    auto it = std::find_if(clients.begin(), clients.end(), [&](const SimClient& c) { return c.name == name; });
    return it == clients.end() ? nullptr : &*it;
}

Ipv4Address Topology::apparent_source(const SimClient& client) const
{
    return kind == TopologyKind::Type2NatBroken ? gateway_ip : client.ip;
}

// --- Scenario parsing -------------------------------------------------------

namespace {

[[noreturn]] void fail(int line, std::string_view what)
{
    throw ScenarioError(fmt::format("line {}: {}", line, what));
}

std::int64_t parse_seconds(int line, std::string_view text)
{
    std::int64_t n = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), n);
    if (ec != std::errc{} || ptr != text.data() + text.size() || n < 0)
        fail(line, fmt::format("expected a non-negative number of seconds, got '{}'", text));
    return n;
}

Ipv4Address parse_ip(int line, std::string_view text)
{
    try {
        return Ipv4Address::from_string(text);
    } catch (const InvalidAddress& e) {
        fail(line, e.what());
    }
}

std::vector<std::string> split_words(std::string_view text)
{
    std::vector<std::string> out;
    std::istringstream in{std::string(text)};
    for (std::string w; in >> w;) {
        if (w.starts_with('#'))
            break;
        out.push_back(std::move(w));
    }
    return out;
}

std::vector<std::string> split_commas(std::string_view text)
{
    std::vector<std::string> out;
    std::size_t start = 0;
    for (;;) {
        std::size_t comma = text.find(',', start);
        out.emplace_back(text.substr(start, comma - start));
        if (comma == std::string_view::npos)
            return out;
        start = comma + 1;
    }
}

} // namespace

Scenario parse_scenario(std::istream& in)
{
    Scenario sc;
    sc.policy.domain_list.clear();
    bool in_actions = false;
    int group = -1;
    int next_group = 0;
    int group_line = 0;
    int line_no = 0;

    for (std::string line; std::getline(in, line);) {
        ++line_no;
        auto w = split_words(line);
        if (w.empty())
            continue;
        const std::string& kw = w[0];
        auto want = [&](std::size_t n) {
            if (w.size() != n)
                fail(line_no, fmt::format("'{}' takes {} argument(s)", kw, n - 1));
        };
        auto setting = [&] {
            if (in_actions)
                fail(line_no, fmt::format("'{}' must come before the first action", kw));
        };

        if (kw == "topology") {
            setting();
            want(2);
            if (w[1] == "type1")
                sc.topology.kind = TopologyKind::Type1;
            else if (w[1] == "type2")
                sc.topology.kind = TopologyKind::Type2;
            else if (w[1] == "type2-nat-broken")
                sc.topology.kind = TopologyKind::Type2NatBroken;
            else
                fail(line_no, fmt::format("unknown topology '{}'", w[1]));
        } else if (kw == "gateway") {
            setting();
            want(2);
            sc.topology.gateway_ip = parse_ip(line_no, w[1]);
        } else if (kw == "client") {
            setting();
            want(3);
            if (!is_valid_identifier(w[1]) || w[1] == "advance" || w[1] == "parallel" || w[1] == "end")
                fail(line_no, fmt::format("bad client name '{}'", w[1]));
            sc.topology.clients.push_back(SimClient{w[1], parse_ip(line_no, w[2])});
        } else if (kw == "policy") {
            setting();
            want(2);
            auto mode = parse_acl_mode(w[1]);
            if (!mode)
                fail(line_no, fmt::format("unknown policy '{}'", w[1]));
            sc.policy.mode = *mode;
        } else if (kw == "domains") {
            setting();
            for (std::size_t i = 1; i < w.size(); ++i) {
                try {
                    sc.policy.domain_list.push_back(normalize_domain_pattern(w[i]));
                } catch (const std::invalid_argument& e) {
                    fail(line_no, e.what());
                }
            }
        } else if (kw == "auth-group") {
            setting();
            want(2);
            sc.policy.auth_group = w[1];
        } else if (kw == "cache-ttl") {
            setting();
            want(2);
            sc.policy.auth_cache_ttl = Seconds{parse_seconds(line_no, w[1])};
        } else if (kw == "max-duration") {
            setting();
            want(2);
            sc.session.max_duration = Seconds{parse_seconds(line_no, w[1])};
            if (sc.session.max_duration <= Seconds::zero())
                fail(line_no, "max-duration must be positive");
        } else if (kw == "inactivity") {
            setting();
            want(2);
            sc.session.inactivity = Seconds{parse_seconds(line_no, w[1])};
        } else if (kw == "user") {
            setting();
            want(4);
            TestUser u{w[1], w[2], split_commas(w[3])};
            if (!is_valid_identifier(u.name))
                fail(line_no, fmt::format("bad user name '{}'", u.name));
            for (const auto& g : u.groups)
                if (!is_valid_identifier(g))
                    fail(line_no, fmt::format("bad group name '{}'", g));
            sc.users.push_back(std::move(u));
        } else if (kw == "parallel") {
            want(1);
            in_actions = true;
            if (group >= 0)
                fail(line_no, "parallel blocks do not nest");
            group = next_group++;
            group_line = line_no;
        } else if (kw == "end") {
            want(1);
            if (group < 0)
                fail(line_no, "'end' without 'parallel'");
            group = -1;
        } else if (kw == "advance") {
            want(2);
            in_actions = true;
            if (group >= 0)
                fail(line_no, "'advance' is not allowed inside a parallel block");
            ScenarioAction a;
            a.kind = ActionKind::AdvanceClock;
            a.seconds = Seconds{parse_seconds(line_no, w[1])};
            a.line = line_no;
            sc.actions.push_back(std::move(a));
        } else {
            // <client> <verb> ...
            in_actions = true;
            if (w.size() < 2)
                fail(line_no, fmt::format("unknown directive '{}'", kw));
            ScenarioAction a;
            a.client = kw;
            a.parallel_group = group;
            a.line = line_no;
            const std::string& verb = w[1];
            if (verb == "request") {
                want(3);
                auto uri = parse_absolute_uri(w[2]);
                if (!uri)
                    fail(line_no, fmt::format("not an http URI: '{}'", w[2]));
                a.kind = ActionKind::Request;
                a.uri = make_absolute_uri(uri->host, uri->port, uri->path);
            } else if (verb == "login") {
                want(5);
                a.kind = ActionKind::Login;
                a.user = w[2];
                a.password = w[3];
                a.seconds = Seconds{parse_seconds(line_no, w[4])};
            } else if (verb == "logout") {
                want(2);
                a.kind = ActionKind::Logout;
            } else {
                fail(line_no, fmt::format("unknown action '{}'", verb));
            }
            sc.actions.push_back(std::move(a));
        }
    }
    if (group >= 0)
        fail(group_line, "parallel block is never closed");

    try {
        sc.topology.validate();
        sc.policy.validate();
    } catch (const std::invalid_argument& e) {
        throw ScenarioError(e.what());
    }
    for (const ScenarioAction& a : sc.actions)
        if (a.kind != ActionKind::AdvanceClock && !sc.topology.find(a.client))
            fail(a.line, fmt::format("unknown client '{}'", a.client));
    return sc;
}

// --- Scenario execution -----------------------------------------------------

std::string format_transcript_line(const TranscriptEntry& e)
{
    std::string_view action;
    std::string detail;
    switch (e.action) {
    case ActionKind::Request:
        action = "request";
        detail = e.uri;
        break;
    case ActionKind::Login:
        action = "login";
        detail = e.uri;
        break;
    case ActionKind::Logout:
        action = "logout";
        detail = "-";
        break;
    case ActionKind::AdvanceClock:
        return fmt::format("{:04} {} advance {}", e.seq, format_utc(e.time), e.uri);
    }
    return fmt::format("{:04} {} {} {} {} {} status={} verdict={} seen={} bytes={}", e.seq, format_utc(e.time),
                       e.client, e.client_ip.to_string(), action, detail, e.status,
                       e.verdict ? std::string(to_string(*e.verdict)) : "-",
                       e.seen_ip ? e.seen_ip->to_string() : "-", e.body.size());
}

namespace {

TranscriptEntry perform(const Topology& topology, const ScenarioAction& a, Testbed& tb)
{
    TranscriptEntry e;
    e.action = a.kind;
    e.time = tb.clock().now();
    const SimClient* client = topology.find(a.client);
    if (!client)
        throw ScenarioError(fmt::format("line {}: unknown client '{}'", a.line, a.client));
    e.client = client->name;
    e.client_ip = client->ip;
    Ipv4Address src = topology.apparent_source(*client);

    HttpResult r;
    switch (a.kind) {
    case ActionKind::Request:
        e.uri = a.uri;
        r = tb.request(src, a.uri);
        break;
    case ActionKind::Login:
        e.uri = fmt::format("user={} duration={}", a.user, a.seconds.count());
        e.seen_ip = src;
        r = tb.login(src, a.user, a.password, a.seconds);
        break;
    case ActionKind::Logout:
        e.seen_ip = src;
        r = tb.logout(src);
        break;
    case ActionKind::AdvanceClock:
        break;
    }
    e.status = r.status;
    e.body = std::move(r.body);
    return e;
}

// Attaches the proxy's verdicts to the request entries of one step. Log
// records may trail the response slightly, so wait briefly for stragglers.
void attach_verdicts(std::span<TranscriptEntry> step, const Topology& topology, Testbed& tb)
{
    std::vector<AccessLogEntry> log;
    std::vector<bool> used;
    auto deadline = std::chrono::steady_clock::now() + std::chrono::seconds(2);
    for (;;) {
        for (auto& e : tb.take_log()) {
            log.push_back(std::move(e));
            used.push_back(false);
        }
        bool missing = false;
        for (TranscriptEntry& t : step) {
            if (t.action != ActionKind::Request || t.seen_ip)
                continue;
            Ipv4Address src = topology.apparent_source(*topology.find(t.client));
            for (std::size_t i = 0; i < log.size(); ++i) {
                if (!used[i] && log[i].client_ip == src && log[i].uri == t.uri) {
                    used[i] = true;
                    t.verdict = log[i].verdict;
                    t.seen_ip = log[i].client_ip;
                    break;
                }
            }
            missing = missing || !t.seen_ip;
        }
        if (!missing || std::chrono::steady_clock::now() > deadline)
            return;
        std::this_thread::sleep_for(std::chrono::milliseconds(1));
    }
}

} // namespace

ScenarioTranscript run_scenario(const Topology& topology, std::span<const ScenarioAction> actions, Testbed& tb)
{
    ScenarioTranscript out;
    std::size_t i = 0;
    while (i < actions.size()) {
        const ScenarioAction& a = actions[i];
        std::size_t step_begin = out.size();
        if (a.kind == ActionKind::AdvanceClock) {
            tb.clock().advance(a.seconds);
            TranscriptEntry e;
            e.action = ActionKind::AdvanceClock;
            e.client = "-";
            e.time = tb.clock().now();
            e.uri = fmt::format("{}s", a.seconds.count());
            out.push_back(std::move(e));
            ++i;
            continue;
        }
        if (a.parallel_group < 0) {
            out.push_back(perform(topology, a, tb));
            ++i;
        } else {
            std::size_t j = i;
            while (j < actions.size() && actions[j].parallel_group == a.parallel_group)
                ++j;
            std::vector<std::future<TranscriptEntry>> running;
            for (std::size_t k = i; k < j; ++k)
                running.push_back(std::async(std::launch::async,
                                             [&, k] { return perform(topology, actions[k], tb); }));
            for (auto& f : running)
                out.push_back(f.get());
            i = j;
        }
        attach_verdicts(std::span(out).subspan(step_begin), topology, tb);
    }
    for (std::size_t k = 0; k < out.size(); ++k)
        out[k].seq = k + 1;
    return out;
}

ScenarioTranscript run_scenario(const Scenario& scenario)
{
    TestbedOptions options;
    options.policy = scenario.policy;
    options.session = scenario.session;
    options.users = scenario.users;
    Testbed tb(std::move(options));
    return run_scenario(scenario.topology, scenario.actions, tb);
}

// --- Latency bench ----------------------------------------------------------

double percentile(std::vector<double> samples, double p)
{
    if (samples.empty())
        return 0;
    std::sort(samples.begin(), samples.end());
    auto rank = static_cast<std::size_t>(std::ceil(p / 100.0 * static_cast<double>(samples.size())));
    return samples[std::clamp<std::size_t>(rank, 1, samples.size()) - 1];
}

LatencySummary bench_latency(const BenchOptions& options)
{
    if (options.clients <= 0 || options.requests_per_client <= 0)
        throw std::invalid_argument("clients and requests must be positive");

    TestbedOptions tb_options;
    tb_options.policy.mode = AclMode::Whitelist;
    tb_options.policy.auth_cache_ttl = options.warm ? Seconds{300} : Seconds{0};
    Testbed tb(std::move(tb_options));

    const std::string uri = make_absolute_uri("bench.example", 80, options.path);
    std::vector<Ipv4Address> ips;
    for (int c = 0; c < options.clients; ++c) {
        Ipv4Address ip{0x0a010000u + static_cast<std::uint32_t>(c) + 1};
        const std::string group = "internet";
        tb.store().insert_session(ip, "bench", std::span(&group, 1), Seconds{86400}, tb.clock().now());
        ips.push_back(ip);
    }

    std::atomic<std::size_t> errors{0};
    auto phase = [&](bool via_proxy) {
        std::vector<std::vector<double>> per_client(ips.size());
        std::vector<std::thread> threads;
        for (std::size_t c = 0; c < ips.size(); ++c) {
            threads.emplace_back([&, c] {
                try {
                    HttpClient client(via_proxy ? tb.proxy_endpoint() : tb.origin().endpoint(),
                                      via_proxy ? std::optional(ips[c]) : std::nullopt);
                    client.get(uri); // connection set-up, not measured
                    for (int r = 0; r < options.requests_per_client; ++r) {
                        auto t0 = std::chrono::steady_clock::now();
                        HttpResult res = client.get(uri);
                        auto t1 = std::chrono::steady_clock::now();
                        if (res.status != 200) {
                            ++errors;
                            continue;
                        }
                        per_client[c].push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
                    }
                } catch (const std::exception&) {
                    ++errors;
                }
            });
        }
        for (auto& t : threads)
            t.join();
        std::vector<double> all;
        for (auto& v : per_client)
            all.insert(all.end(), v.begin(), v.end());
        return all;
    };

    auto start = std::chrono::steady_clock::now();
    std::vector<double> direct = phase(false);
    if (!options.warm)
        tb.engine().clear_cache();
    std::vector<double> proxied = phase(true);

    LatencySummary s;
    s.elapsed_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    s.samples = proxied.size();
    s.errors = errors.load();
    s.direct_p50_ms = percentile(direct, 50);
    s.direct_p95_ms = percentile(direct, 95);
    s.proxy_p50_ms = percentile(proxied, 50);
    s.proxy_p95_ms = percentile(proxied, 95);
    s.overhead_p50_ms = s.proxy_p50_ms - s.direct_p50_ms;
    s.overhead_p95_ms = s.proxy_p95_ms - s.direct_p95_ms;
    AclStats stats = tb.engine().stats();
    s.store_lookups = stats.store_lookups;
    s.cache_hits = stats.cache_hits;
    return s;
}

std::string format_summary(const LatencySummary& s)
{
    return fmt::format("samples: {}\nerrors: {}\n"
                       "direct_p50_ms: {:.3f}\ndirect_p95_ms: {:.3f}\n"
                       "proxy_p50_ms: {:.3f}\nproxy_p95_ms: {:.3f}\n"
                       "overhead_p50_ms: {:.3f}\noverhead_p95_ms: {:.3f}\n"
                       "store_lookups: {}\ncache_hits: {}\nelapsed_s: {:.2f}\n",
                       s.samples, s.errors, s.direct_p50_ms, s.direct_p95_ms, s.proxy_p50_ms, s.proxy_p95_ms,
                       s.overhead_p50_ms, s.overhead_p95_ms, s.store_lookups, s.cache_hits, s.elapsed_s);
}

} // namespace ipgate::harness
