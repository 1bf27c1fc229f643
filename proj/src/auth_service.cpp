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

#include "ipgate/auth_service.hpp"
#include "ipgate/uri.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>
#include <spdlog/spdlog.h>

namespace ipgate {

using json = nlohmann::json;

namespace {

constexpr std::size_t kMaxHead = 64 * 1024;
constexpr std::size_t kMaxBody = 64 * 1024;

bool wants_json(const RequestHead& request)
{
    auto accept = request.headers.get("Accept");
    return accept && accept->find("application/json") != std::string_view::npos;
}

HttpResponse json_response(int status, const json& body)
{
    HttpResponse r;
    r.status = status;
    r.content_type = "application/json";
    r.body = body.dump() + "\n";
    return r;
}

HttpResponse html_response(int status, std::string_view title, std::string_view body)
{
    HttpResponse r;
    r.status = status;
    r.body = fmt::format("<!DOCTYPE html>\n<html>\n<head><meta charset=\"utf-8\"><title>{0}</title></head>\n"
                         "<body>\n<h1>{0}</h1>\n{1}</body>\n</html>\n",
                         html_escape(title), body);
    r.headers.add("Cache-Control", "no-store");
    return r;
}

/// Only absolute http URLs are honoured as return targets.
std::optional<std::string> safe_return_url(std::string_view candidate)
{
    if (candidate.empty() || !parse_absolute_uri(candidate))
        return std::nullopt;
    return std::string(candidate);
}

std::string_view path_of(std::string_view target)
{
    return target.substr(0, target.find('?'));
}

std::string_view query_of(std::string_view target)
{
    std::size_t q = target.find('?');
    return q == std::string_view::npos ? std::string_view{} : target.substr(q + 1);
}

json status_json(const SessionStatus& s, TimePoint now)
{
    json j{{"authenticated", s.authenticated},
           {"remaining", s.remaining.count()},
           {"server_time", now.time_since_epoch().count()}};
    j["user"] = s.user ? json(*s.user) : json(nullptr);
    return j;
}

std::string status_text(const SessionStatus& s)
{
    return fmt::format("authenticated: {}\nuser: {}\nremaining: {}\n", s.authenticated ? "true" : "false",
                       s.user.value_or("-"), s.remaining.count());
}

std::string_view mime_type(const std::filesystem::path& p)
{
    auto ext = p.extension().string();
    if (ext == ".html")
        return "text/html; charset=utf-8";
    if (ext == ".js")
        return "text/javascript";
    if (ext == ".css")
        return "text/css";
    if (ext == ".json")
        return "application/json";
    if (ext == ".svg")
        return "image/svg+xml";
    if (ext == ".png")
        return "image/png";
    return "application/octet-stream";
}

} // namespace

int LoginOutcome::http_status() const noexcept
{
    if (ok())
        return 200;
    switch (failure) {
    case LoginFailure::InvalidRequest:
        return 400;
    case LoginFailure::BadCredentials:
        return 401;
    case LoginFailure::ServiceUnavailable:
        return 503;
    }
    return 500;
}

std::string describe_duration(Seconds d)
{
    auto plural = [](long long n, std::string_view unit) {
        return fmt::format("{} {}{}", n, unit, n == 1 ? "" : "s");
    };
    long long s = d.count();
    if (s % 3600 == 0)
        return plural(s / 3600, "hour");
    if (s % 60 == 0)
        return plural(s / 60, "minute");
    return plural(s, "second");
}

LoginOutcome AuthService::handle_login(const LoginRequest& request, TimePoint now)
{
    if (request.user.empty() || request.password.empty() || request.duration <= Seconds::zero())
        return LoginOutcome{std::nullopt, LoginFailure::InvalidRequest};

    VerifyResult verdict;
    try {
        verdict = backend_.verify(request.user, request.password);
    } catch (const BackendUnavailable& e) {
        spdlog::error("login for {} from {}: credential backend unavailable: {}", request.user,
                      request.client_ip.to_string(), e.what());
        return LoginOutcome{std::nullopt, LoginFailure::ServiceUnavailable};
    }
    if (!verdict.success || verdict.groups.empty()) {
        spdlog::info("login for {} from {} rejected", request.user, request.client_ip.to_string());
        return LoginOutcome{std::nullopt, LoginFailure::BadCredentials};
    }

    Seconds duration = std::min(request.duration, defaults_.max_duration);
    try {
        SessionRecord rec = store_.insert_session(request.client_ip, request.user, verdict.groups, duration, now);
        spdlog::info("login: {} at {} until {}", rec.user, rec.ip.to_string(), format_utc(rec.end_time));
        if (login_listener_)
            login_listener_(rec.ip);
        return LoginOutcome{SessionStatus{true, rec.user, duration}, LoginFailure::InvalidRequest};
    } catch (const StoreUnavailable& e) {
        spdlog::error("login for {}: session store unavailable: {}", request.user, e.what());
        return LoginOutcome{std::nullopt, LoginFailure::ServiceUnavailable};
    } catch (const std::invalid_argument& e) {
        spdlog::warn("login for {}: {}", request.user, e.what());
        return LoginOutcome{std::nullopt, LoginFailure::InvalidRequest};
    }
}

SessionStatus AuthService::handle_logout(Ipv4Address client_ip)
{
    if (store_.logout(client_ip))
        spdlog::info("logout: {}", client_ip.to_string());
    return SessionStatus{};
}

SessionStatus AuthService::handle_status(Ipv4Address client_ip, TimePoint now)
{
    auto rec = store_.find(client_ip);
    if (!rec || rec->end_time < now)
        return SessionStatus{};
    if (defaults_.inactivity && rec->last_activity + *defaults_.inactivity < now)
        return SessionStatus{};
    return SessionStatus{true, rec->user, rec->end_time - now};
}

AuthServer::AuthServer(AuthServerOptions options, AuthService& service, const Clock& clock)
    : options_(std::move(options)), service_(service), clock_(clock),
      server_(options_.listen_address, options_.listen_port, options_.proxy_protocol,
              [this](Socket& s, const PeerInfo& p) { serve(s, p); })
{
}

AuthServer::~AuthServer()
{
    stop();
}

void AuthServer::start()
{
    server_.start();
    spdlog::info("login service listening on {}:{}", options_.listen_address, server_.port());
}

void AuthServer::stop()
{
    server_.stop();
}

void AuthServer::serve(Socket& sock, const PeerInfo& peer)
{
    sock.set_timeouts(std::chrono::seconds(30));
    BufferedReader reader(sock);
    for (;;) {
        std::optional<std::string> raw;
        try {
            raw = reader.read_head(kMaxHead);
        } catch (const HeadTooLarge&) {
            write_simple_response(sock, 431, "text/plain", "request head too large\n", false);
            return;
        }
        if (!raw)
            return;
        RequestHead head;
        std::string body;
        try {
            head = parse_request_head(*raw);
            body = read_body(reader, request_framing(head), kMaxBody);
        } catch (const HttpParseError& e) {
            write_simple_response(sock, 400, "text/plain", fmt::format("{}\n", e.what()), false);
            return;
        }
        HttpResponse resp = handle(head, body, peer.source.address);
        bool keep = wants_keep_alive(head);
        write_simple_response(sock, resp.status, resp.content_type, resp.body, keep, resp.headers);
        if (!keep)
            return;
    }
}

HttpResponse AuthServer::handle(const RequestHead& request, std::string_view body, Ipv4Address client_ip)
{
    std::string_view path = path_of(request.target);
    bool as_json = wants_json(request);
    try {
        if (path == "/")
            return [&] {
                HttpResponse r;
                r.status = 302;
                r.headers.add("Location", "/login");
                return r;
            }();
        if (path == "/login") {
            if (request.method == "GET" || request.method == "HEAD")
                return login_form(request, as_json);
            if (request.method == "POST")
                return login_submit(request, body, client_ip, as_json);
        } else if (path == "/logout") {
            if (request.method == "POST")
                return logout(client_ip, as_json);
        } else if (path == "/status") {
            if (request.method == "GET" || request.method == "HEAD")
                return status(client_ip, as_json);
        } else if (path.starts_with("/portal/") || path == "/portal") {
            if (request.method == "GET" || request.method == "HEAD")
                return portal_file(path);
        } else {
            return html_response(404, "Not found", "<p>No such page.</p>\n");
        }
        HttpResponse r = html_response(405, "Method not allowed", "<p>Method not allowed.</p>\n");
        return r;
    } catch (const StoreUnavailable& e) {
        spdlog::error("session store unavailable: {}", e.what());
        if (as_json)
            return json_response(503, {{"error", "service_unavailable"}});
        return html_response(503, "Service unavailable",
                             "<p>The authentication service is temporarily unavailable.</p>\n");
    }
}

HttpResponse AuthServer::login_form(const RequestHead& request, bool as_json)
{
    Seconds max = service_.defaults().max_duration;
    if (as_json) {
        json::array_t durations;
        for (Seconds d : options_.duration_options)
            durations.push_back(std::min(d, max).count());
        return json_response(200, {{"durations", durations}, {"max_duration", max.count()}});
    }
    auto query = parse_form(query_of(request.target));
    std::string ret;
    if (auto it = query.find("return"); it != query.end())
        ret = safe_return_url(it->second).value_or("");

    std::string options;
    for (Seconds d : options_.duration_options) {
        Seconds c = std::min(d, max);
        options += fmt::format("<option value=\"{}\">{}</option>\n", c.count(), describe_duration(c));
    }
    std::string form = fmt::format(
        "<form method=\"post\" action=\"/login\">\n"
        "<p><label>User name <input type=\"text\" name=\"user\" autocomplete=\"username\"></label></p>\n"
        "<p><label>Password <input type=\"password\" name=\"password\" autocomplete=\"current-password\"></label></p>\n"
        "<p><label>Duration of access <select name=\"duration\">\n{}</select></label></p>\n"
        "<input type=\"hidden\" name=\"return\" value=\"{}\">\n"
        "<p><button type=\"submit\">Log in</button></p>\n"
        "</form>\n",
        options, html_escape(ret));
    return html_response(200, "Web access login", form);
}

HttpResponse AuthServer::login_submit(const RequestHead& request, std::string_view body, Ipv4Address client_ip,
                                      bool as_json)
{
    std::map<std::string, std::string> fields;
    auto ctype = request.headers.get("Content-Type");
    if (ctype && ctype->find("application/json") != std::string_view::npos) {
        auto parsed = json::parse(body, nullptr, false);
        if (parsed.is_object()) {
            for (const auto& [k, v] : parsed.items())
                fields[k] = v.is_string() ? v.get<std::string>() : v.dump();
        }
    } else {
        fields = parse_form(body);
    }

    LoginRequest req;
    req.user = fields["user"];
    req.password = fields["password"];
    // Only the transport address counts; an "ip" field in the body is ignored.
    req.client_ip = client_ip;
    const std::string& dur = fields["duration"];
    long long secs = 0;
    auto [ptr, ec] = std::from_chars(dur.data(), dur.data() + dur.size(), secs);
    if (ec == std::errc{} && ptr == dur.data() + dur.size())
        req.duration = Seconds{secs};
    std::optional<std::string> ret = safe_return_url(fields["return"]);

    TimePoint now = clock_.now();
    LoginOutcome outcome = service_.handle_login(req, now);
    int code = outcome.http_status();
    if (as_json) {
        if (outcome.ok()) {
            json j = status_json(*outcome.status, now);
            j["return_url"] = ret ? json(*ret) : json(nullptr);
            return json_response(code, j);
        }
        static constexpr const char* kErrors[] = {"invalid_request", "invalid_credentials", "service_unavailable"};
        return json_response(code, {{"error", kErrors[static_cast<int>(outcome.failure)]}});
    }
    if (outcome.ok()) {
        const SessionStatus& s = *outcome.status;
        std::string body_html =
            fmt::format("<p>Logged in as <strong>{}</strong> for {}.</p>\n"
                        "<p>Web access from this computer ends at {}.</p>\n",
                        html_escape(*s.user), describe_duration(s.remaining), format_utc(now + s.remaining));
        if (ret)
            body_html += fmt::format("<p><a href=\"{}\">Continue to {}</a></p>\n", html_escape(*ret), html_escape(*ret));
        body_html += "<form method=\"post\" action=\"/logout\"><button type=\"submit\">Log out</button></form>\n";
        return html_response(200, "Login successful", body_html);
    }
    switch (outcome.failure) {
    case LoginFailure::BadCredentials:
        return html_response(401, "Login failed",
                             "<p>Invalid user name or password.</p>\n<p><a href=\"/login\">Try again</a></p>\n");
    case LoginFailure::ServiceUnavailable:
        return html_response(503, "Service unavailable",
                             "<p>The authentication service is temporarily unavailable. Please try again later.</p>\n");
    case LoginFailure::InvalidRequest:
        break;
    }
    return html_response(400, "Incomplete login",
                         "<p>User name, password and a duration are required.</p>\n<p><a href=\"/login\">Back</a></p>\n");
}

HttpResponse AuthServer::logout(Ipv4Address client_ip, bool as_json)
{
    SessionStatus s = service_.handle_logout(client_ip);
    if (as_json)
        return json_response(200, status_json(s, clock_.now()));
    return html_response(200, "Logged out", "<p>Web access from this computer has ended.</p>\n");
}

HttpResponse AuthServer::status(Ipv4Address client_ip, bool as_json)
{
    TimePoint now = clock_.now();
    SessionStatus s = service_.handle_status(client_ip, now);
    if (as_json)
        return json_response(200, status_json(s, now));
    HttpResponse r;
    r.content_type = "text/plain; charset=utf-8";
    r.body = status_text(s);
    r.headers.add("Cache-Control", "no-store");
    return r;
}

HttpResponse AuthServer::portal_file(std::string_view path)
{
    if (options_.portal_dir.empty())
        return html_response(404, "Not found", "<p>No portal is installed.</p>\n");
    std::string_view rel = path.substr(std::min<std::size_t>(path.size(), 8));
    if (rel.empty())
        rel = "index.html";
    std::filesystem::path root = std::filesystem::weakly_canonical(options_.portal_dir);
    std::filesystem::path file = std::filesystem::weakly_canonical(root / std::string(rel));
    auto [r_end, f_it] = std::mismatch(root.begin(), root.end(), file.begin(), file.end());
    if (r_end != root.end() || !std::filesystem::is_regular_file(file))
        return html_response(404, "Not found", "<p>No such file.</p>\n");
    std::ifstream in(file, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    HttpResponse r;
    r.content_type = mime_type(file);
    r.body = buf.str();
    return r;
}

} // namespace ipgate
