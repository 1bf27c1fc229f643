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

#include "ipgate/proxy.hpp"

#include <array>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

namespace ipgate {

namespace {

constexpr std::size_t kDiscardLimit = 1024 * 1024;

} // namespace

std::optional<Endpoint> DnsResolver::resolve(std::string_view host, std::uint16_t port)
{
    if (auto addr = resolve_ipv4(host))
        return Endpoint{*addr, port};
    return std::nullopt;
}

void StaticResolver::add(std::string host, Endpoint target)
{
    std::lock_guard lock(mutex_);
    table_.insert_or_assign(std::move(host), target);
}

void StaticResolver::set_fallback(Endpoint target)
{
    std::lock_guard lock(mutex_);
    fallback_ = target;
}

std::optional<Endpoint> StaticResolver::resolve(std::string_view host, std::uint16_t)
{
    std::lock_guard lock(mutex_);
    if (auto it = table_.find(host); it != table_.end())
        return it->second;
    return fallback_;
}

std::string format_access_log_line(const AccessLogEntry& e)
{
    return fmt::format("{} {} {} {} {} {} {} {}", format_utc(e.time), e.client_ip.to_string(),
                       e.verdict ? to_string(*e.verdict) : std::string_view("-"), e.user.value_or("-"),
                       e.method.empty() ? "-" : e.method, e.uri.empty() ? "-" : e.uri, e.status, e.bytes);
}

void AccessLog::record(const AccessLogEntry& entry)
{
    std::lock_guard lock(mutex_);
    if (out_) {
        *out_ << format_access_log_line(entry) << '\n';
        out_->flush();
    }
    if (observer_)
        observer_(entry);
}

void AccessLog::set_observer(Observer observer)
{
    std::lock_guard lock(mutex_);
    observer_ = std::move(observer);
}

std::string render_deny_page(const Verdict& verdict, const HttpRequestSummary& request, std::string_view login_url)
{
    std::string host = html_escape(request.host);
    std::string title;
    std::string body;
    if (verdict.action == VerdictAction::DenyBlacklisted) {
        title = "Site blocked";
        body = fmt::format("<p>Access to <strong>{}</strong> is blocked by the network access policy.</p>\n"
                           "<p>Reason: the site is on this network's list of blocked domains.</p>\n",
                           host);
    } else {
        title = "Login required";
        char sep = login_url.find('?') == std::string_view::npos ? '?' : '&';
        std::string link = fmt::format("{}{}return={}", login_url, sep, url_encode(request.absolute_uri));
        body = fmt::format("<p>Access to <strong>{}</strong> requires you to log in.</p>\n"
                           "<p>Reason: web access from this computer has not been authenticated, "
                           "or the session has expired.</p>\n"
                           "<p><a href=\"{}\">Log in to continue</a></p>\n",
                           host, html_escape(link));
    }
    return fmt::format("<!DOCTYPE html>\n<html>\n<head><meta charset=\"utf-8\"><title>{0}</title></head>\n"
                       "<body>\n<h1>{0}</h1>\n{1}<p><small>{2}</small></p>\n</body>\n</html>\n",
                       title, body, html_escape(request.absolute_uri));
}

std::string render_error_page(int status, std::string_view detail)
{
    return fmt::format("<!DOCTYPE html>\n<html>\n<head><meta charset=\"utf-8\"><title>{0} {1}</title></head>\n"
                       "<body>\n<h1>{0} {1}</h1>\n<p>{2}</p>\n</body>\n</html>\n",
                       status, reason_phrase(status), html_escape(detail));
}

std::string_view to_string(UpstreamError::Reason reason) noexcept
{
    switch (reason) {
    case UpstreamError::Reason::Dns:
        return "dns";
    case UpstreamError::Reason::Connect:
        return "connect";
    case UpstreamError::Reason::Timeout:
        return "timeout";
    case UpstreamError::Reason::Protocol:
        return "protocol";
    }
    return "?";
}

bool UpstreamResponse::reusable() const
{
    if (!connection || framing.kind == BodyKind::UntilClose)
        return false;
    if (head.headers.has_token("Connection", "close"))
        return false;
    return head.version == "HTTP/1.1" || head.headers.has_token("Connection", "keep-alive");
}

namespace {

using Reason = UpstreamError::Reason;

UpstreamConnection open_upstream(const Endpoint& endpoint, std::chrono::milliseconds timeout)
{
    UpstreamConnection c;
    c.endpoint = endpoint;
    try {
        c.socket = std::make_unique<Socket>(connect_tcp(endpoint, timeout));
        c.socket->set_timeouts(timeout);
    } catch (const TimeoutError& e) {
        throw UpstreamError(Reason::Timeout, e.what());
    } catch (const IoError& e) {
        throw UpstreamError(Reason::Connect, e.what());
    }
    c.reader = std::make_unique<BufferedReader>(*c.socket);
    return c;
}

RequestHead origin_request(const HttpRequestSummary& request, const RequestHead& client_head,
                           const BodyFraming& body_framing)
{
    RequestHead out;
    out.method = client_head.method;
    out.target = request.request_target.starts_with('/') ? request.request_target
                                                          : reconstruct_uri(client_head).path;
    out.version = "HTTP/1.1";
    out.headers = client_head.headers;
    strip_hop_by_hop(out.headers);
    out.headers.remove("Expect");
    out.headers.set("Host", request.port == 80 ? request.host : fmt::format("{}:{}", request.host, request.port));
    out.headers.add("Via", fmt::format("{} ipgate", client_head.version == "HTTP/1.0" ? "1.0" : "1.1"));
    if (body_framing.kind == BodyKind::Chunked)
        out.headers.add("Transfer-Encoding", "chunked");
    return out;
}

// Reads up to the final response head. Returns nullopt when the origin
// closed before sending anything, which on a reused connection means it
// timed the connection out.
std::optional<ResponseHead> read_final_head(BufferedReader& reader)
{
    for (;;) {
        auto raw = reader.read_head(64 * 1024);
        if (!raw)
            return std::nullopt;
        ResponseHead head = parse_response_head(*raw);
        // Interim responses are not relayed; Expect was removed.
        if (head.status >= 100 && head.status < 200 && head.status != 101)
            continue;
        return head;
    }
}

} // namespace

UpstreamResponse forward_request(const HttpRequestSummary& request, const RequestHead& client_head,
                                 BufferedReader& client_body, const BodyFraming& body_framing,
                                 UpstreamResolver& resolver, std::chrono::milliseconds timeout,
                                 UpstreamConnection idle)
{
    auto endpoint = resolver.resolve(request.host, request.port);
    if (!endpoint)
        throw UpstreamError(Reason::Dns, fmt::format("cannot resolve {}", request.host));

    const std::string wire = serialize(origin_request(request, client_head, body_framing));
    // Only a request without a body can be replayed on a fresh connection.
    if (idle && idle.endpoint == *endpoint && body_framing.kind == BodyKind::None) {
        try {
            idle.socket->write_all(wire);
            if (auto head = read_final_head(*idle.reader)) {
                UpstreamResponse up{std::move(idle), std::move(*head), {}, true};
                if (up.head.status == 101)
                    throw UpstreamError(Reason::Protocol, "origin attempted a protocol upgrade");
                up.framing = response_framing(request.method, up.head);
                return up;
            }
        } catch (const UpstreamError&) {
            throw;
        } catch (const TimeoutError& e) {
            throw UpstreamError(Reason::Timeout, e.what());
        } catch (const IoError&) {
            // Dropped while idle; retry below.
        } catch (const std::exception& e) {
            throw UpstreamError(Reason::Protocol, e.what());
        }
    }
    idle = {};

    UpstreamResponse up;
    up.connection = open_upstream(*endpoint, timeout);
    try {
        up.connection.socket->write_all(wire);
    } catch (const TimeoutError& e) {
        throw UpstreamError(Reason::Timeout, e.what());
    } catch (const IoError& e) {
        throw UpstreamError(Reason::Connect, e.what());
    }
    // A failure here is the client's: let IoError escape unchanged.
    relay_body(client_body, *up.connection.socket, body_framing, true);

    try {
        auto head = read_final_head(*up.connection.reader);
        if (!head)
            throw UpstreamError(Reason::Protocol, "origin closed without a response");
        up.head = std::move(*head);
        if (up.head.status == 101)
            throw UpstreamError(Reason::Protocol, "origin attempted a protocol upgrade");
        up.framing = response_framing(request.method, up.head);
    } catch (const UpstreamError&) {
        throw;
    } catch (const TimeoutError& e) {
        throw UpstreamError(Reason::Timeout, e.what());
    } catch (const std::exception& e) {
        throw UpstreamError(Reason::Protocol, e.what());
    }
    return up;
}

ProxyServer::ProxyServer(ProxyOptions options, AclEngine& engine, const Clock& clock, UpstreamResolver& resolver,
                         AccessLog& log)
    : options_(std::move(options)), engine_(engine), clock_(clock), resolver_(resolver), log_(log),
      portal_(parse_absolute_uri(options_.login_url)),
      server_(options_.listen_address, options_.listen_port, options_.proxy_protocol,
              [this](Socket& s, const PeerInfo& p) { handle_connection(s, p); })
{
}

ProxyServer::~ProxyServer()
{
    stop();
}

void ProxyServer::start()
{
    server_.start();
    spdlog::info("proxy listening on {}:{}", options_.listen_address, server_.port());
}

void ProxyServer::stop()
{
    server_.stop();
}

ProxyStats ProxyServer::stats() const noexcept
{
    return ProxyStats{requests_.load(), upstream_connections_.load(), peak_buffer_.load()};
}

void ProxyServer::note_buffer(std::size_t bytes)
{
    std::size_t prev = peak_buffer_.load();
    while (bytes > prev && !peak_buffer_.compare_exchange_weak(prev, bytes)) {
    }
}

bool ProxyServer::is_portal_target(const HttpRequestSummary& s) const
{
    return portal_ && s.host == portal_->host && s.port == portal_->port;
}

void ProxyServer::handle_connection(Socket& client, const PeerInfo& peer)
{
    const Ipv4Address client_ip = peer.source.address;
    client.set_timeouts(options_.client_idle_timeout);
    BufferedReader reader(client);

    auto log = [&](std::optional<VerdictAction> verdict, std::optional<std::string> user, std::string method,
                   std::string uri, int status, std::uint64_t bytes) {
        log_.record(AccessLogEntry{clock_.now(), client_ip, verdict, std::move(user), std::move(method),
                                   std::move(uri), status, bytes});
    };
    auto fail = [&](int status, std::string_view detail, std::string method = {}, std::string uri = {}) {
        std::string page = render_error_page(status, detail);
        try {
            write_simple_response(client, status, "text/html; charset=utf-8", page, false);
        } catch (const IoError&) {
        }
        log(std::nullopt, std::nullopt, std::move(method), std::move(uri), status, page.size());
    };

    // Kept between requests of this client only; never shared across clients.
    UpstreamConnection idle;

    for (;;) {
        std::optional<std::string> raw;
        try {
            raw = reader.read_head(options_.max_head_bytes);
        } catch (const HeadTooLarge&) {
            fail(431, "The request head exceeds the proxy's size limit.");
            return;
        } catch (const IoError&) {
            return;
        }
        if (!raw)
            return;
        ++requests_;
        note_buffer(reader.high_water());

        RequestHead head;
        BodyFraming framing;
        ResolvedTarget target;
        try {
            head = parse_request_head(*raw);
            if (head.method == "CONNECT") {
                std::string page = render_error_page(403, "Tunnelling (CONNECT) is not permitted through this proxy.");
                write_simple_response(client, 403, "text/html; charset=utf-8", page, false);
                log(std::nullopt, std::nullopt, head.method, head.target, 403, page.size());
                return;
            }
            framing = request_framing(head);
            target = reconstruct_uri(head);
        } catch (const HttpParseError& e) {
            fail(400, e.what(), head.method, head.target);
            return;
        }

        HttpRequestSummary summary{client_ip, head.method, head.target, target.host, target.port,
                                   target.absolute_uri};
        bool keep_alive = wants_keep_alive(head);

        Verdict verdict{VerdictAction::Allow, std::nullopt};
        if (!is_portal_target(summary))
            verdict = engine_.evaluate(summary, clock_.now());

        if (!verdict.allowed()) {
            if (framing.kind != BodyKind::None) {
                try {
                    read_body(reader, framing, kDiscardLimit);
                } catch (const std::exception&) {
                    keep_alive = false;
                }
            }
            std::string page = render_deny_page(verdict, summary, options_.login_url);
            HeaderMap extra;
            extra.add("Cache-Control", "no-store");
            try {
                write_simple_response(client, 403, "text/html; charset=utf-8", page, keep_alive, extra);
            } catch (const IoError&) {
                return;
            }
            log(verdict.action, std::nullopt, summary.method, summary.absolute_uri, 403, page.size());
            if (!keep_alive)
                return;
            continue;
        }

        UpstreamResponse up;
        try {
            up = forward_request(summary, head, reader, framing, resolver_, options_.upstream_timeout,
                                 std::move(idle));
            if (!up.reused)
                ++upstream_connections_;
        } catch (const UpstreamError& e) {
            spdlog::warn("upstream {} failed ({}): {}", summary.absolute_uri, to_string(e.reason()), e.what());
            std::string page =
                render_error_page(502, fmt::format("The origin server could not be reached ({}).", to_string(e.reason())));
            try {
                write_simple_response(client, 502, "text/html; charset=utf-8", page, false);
            } catch (const IoError&) {
            }
            log(verdict.action, verdict.authenticated_user, summary.method, summary.absolute_uri, 502, page.size());
            return;
        } catch (const IoError& e) {
            spdlog::debug("client {} went away while sending a body: {}", client_ip.to_string(), e.what());
            return;
        }

        ResponseHead out = up.head;
        out.version = "HTTP/1.1";
        strip_hop_by_hop(out.headers);
        bool passthrough = false;
        if (up.framing.kind == BodyKind::Chunked) {
            if (head.version == "HTTP/1.1") {
                out.headers.add("Transfer-Encoding", "chunked");
                passthrough = true;
            } else {
                keep_alive = false;
            }
        } else if (up.framing.kind == BodyKind::UntilClose) {
            keep_alive = false;
        }
        out.headers.add("Connection", keep_alive ? "keep-alive" : "close");

        std::uint64_t bytes = 0;
        try {
            client.write_all(serialize(out));
            bytes = relay_body(*up.connection.reader, client, up.framing, passthrough);
        } catch (const IoError& e) {
            note_buffer(up.connection.reader->high_water());
            spdlog::warn("relay of {} to {} aborted: {}", summary.absolute_uri, client_ip.to_string(), e.what());
            log(verdict.action, verdict.authenticated_user, summary.method, summary.absolute_uri, up.head.status,
                bytes);
            return;
        }
        note_buffer(up.connection.reader->high_water());
        log(verdict.action, verdict.authenticated_user, summary.method, summary.absolute_uri, up.head.status, bytes);
        if (!keep_alive)
            return;
        if (up.reusable())
            idle = std::move(up.connection);
    }
}

} // namespace ipgate
