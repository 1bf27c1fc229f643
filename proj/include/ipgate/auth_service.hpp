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

// Captive login service.
//
// Endpoints (the client address always comes from the connection, never
// from the request):
//
//   GET  /login    login form; JSON {durations, max_duration} on Accept: application/json
//   POST /login    user, password, duration[, return]  -> 200 / 400 / 401 / 503
//   POST /logout   ends the session for the calling address
//   GET  /status   "authenticated: ...\nuser: ...\nremaining: ...\n" or JSON
//   GET  /portal/* static files for the browser portal, when configured

#pragma once

#include "ipgate/clock.hpp"
#include "ipgate/config.hpp"
#include "ipgate/credentials.hpp"
#include "ipgate/http.hpp"
#include "ipgate/net.hpp"
#include "ipgate/session_store.hpp"

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace ipgate {

struct SessionStatus {
    bool authenticated = false;
    std::optional<std::string> user;
    Seconds remaining{0};

    bool operator==(const SessionStatus&) const = default;
};

struct LoginRequest {
    std::string user;
    std::string password;
    Seconds duration{0};
    Ipv4Address client_ip;
};

enum class LoginFailure { InvalidRequest, BadCredentials, ServiceUnavailable };

struct LoginOutcome {
    std::optional<SessionStatus> status; ///< set on success
    LoginFailure failure = LoginFailure::InvalidRequest;

    bool ok() const noexcept { return status.has_value(); }
    /// 200, 400, 401 or 503
    int http_status() const noexcept;
};

class AuthService {
public:
    AuthService(CredentialBackend& backend, SessionStore& store, SessionDefaults defaults)
        : backend_(backend), store_(store), defaults_(defaults)
    {
    }

    /// Verifies credentials, clamps the duration to max_duration and inserts
    /// the session. Nothing is stored unless verify succeeded.
    LoginOutcome handle_login(const LoginRequest& request, TimePoint now);

    /// Throws StoreUnavailable.
    SessionStatus handle_logout(Ipv4Address client_ip);

    /// Throws StoreUnavailable.
    SessionStatus handle_status(Ipv4Address client_ip, TimePoint now);

    const SessionDefaults& defaults() const noexcept { return defaults_; }

    /// Called with the client address after each successful login. A proxy
    /// in the same process uses it to drop a cached denial.
    void set_login_listener(std::function<void(Ipv4Address)> listener) { login_listener_ = std::move(listener); }

private:
    CredentialBackend& backend_;
    SessionStore& store_;
    SessionDefaults defaults_;
    std::function<void(Ipv4Address)> login_listener_;
};

struct HttpResponse {
    int status = 200;
    std::string content_type = "text/html; charset=utf-8";
    std::string body;
    HeaderMap headers;
};

struct AuthServerOptions {
    std::string listen_address = "0.0.0.0";
    std::uint16_t listen_port = 8081;
    bool proxy_protocol = false;
    std::vector<Seconds> duration_options{Seconds{3600}, Seconds{4 * 3600}, Seconds{8 * 3600}};
    std::filesystem::path portal_dir;
};

class AuthServer {
public:
    AuthServer(AuthServerOptions options, AuthService& service, const Clock& clock);
    ~AuthServer();

    void start();
    void stop();
    std::uint16_t port() const noexcept { return server_.port(); }

    /// Routes one request from `client_ip`.
    HttpResponse handle(const RequestHead& request, std::string_view body, Ipv4Address client_ip);

private:
    void serve(Socket& sock, const PeerInfo& peer);
    HttpResponse login_form(const RequestHead& request, bool as_json);
    HttpResponse login_submit(const RequestHead& request, std::string_view body, Ipv4Address client_ip, bool as_json);
    HttpResponse logout(Ipv4Address client_ip, bool as_json);
    HttpResponse status(Ipv4Address client_ip, bool as_json);
    HttpResponse portal_file(std::string_view path);

    AuthServerOptions options_;
    AuthService& service_;
    const Clock& clock_;
    TcpServer server_;
};

/// "1 hour", "4 hours", "90 minutes", "45 seconds"
std::string describe_duration(Seconds d);

} // namespace ipgate
