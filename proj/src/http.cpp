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

#include "ipgate/http.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>

#include <fmt/format.h>

namespace ipgate {

namespace {

constexpr std::size_t kRelayChunk = 16 * 1024;

bool is_tchar(char c)
{
    auto u = static_cast<unsigned char>(c);
    if (std::isalnum(u))
        return true;
    return std::string_view("!#$%&'*+-.^_`|~").find(c) != std::string_view::npos;
}

bool is_token(std::string_view s)
{
    return !s.empty() && std::all_of(s.begin(), s.end(), is_tchar);
}

std::string_view trim_ows(std::string_view s)
{
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t'))
        s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t'))
        s.remove_suffix(1);
    return s;
}

/// Splits a head into lines with CR stripped, dropping the final blank one.
std::vector<std::string_view> split_lines(std::string_view head)
{
    std::vector<std::string_view> lines;
    while (!head.empty()) {
        std::size_t lf = head.find('\n');
        std::string_view line = head.substr(0, lf);
        if (line.ends_with('\r'))
            line.remove_suffix(1);
        lines.push_back(line);
        if (lf == std::string_view::npos)
            break;
        head.remove_prefix(lf + 1);
    }
    while (!lines.empty() && lines.back().empty())
        lines.pop_back();
    return lines;
}

void parse_header_lines(std::span<const std::string_view> lines, HeaderMap& headers)
{
    for (std::string_view line : lines) {
        if (line.front() == ' ' || line.front() == '\t')
            throw HttpParseError("obsolete header line folding");
        std::size_t colon = line.find(':');
        if (colon == std::string_view::npos)
            throw HttpParseError(fmt::format("malformed header line '{}'", line));
        std::string_view name = line.substr(0, colon);
        if (!is_token(name))
            throw HttpParseError(fmt::format("invalid header name '{}'", name));
        std::string_view value = trim_ows(line.substr(colon + 1));
        if (std::any_of(value.begin(), value.end(), [](char c) { return c == '\0' || c == '\r' || c == '\n'; }))
            throw HttpParseError("control character in header value");
        headers.add(std::string(name), std::string(value));
    }
}

bool valid_version(std::string_view v)
{
    return v == "HTTP/1.1" || v == "HTTP/1.0";
}

std::optional<std::uint64_t> parse_decimal(std::string_view s)
{
    std::uint64_t v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || ec != std::errc{} || ptr != s.data() + s.size())
        return std::nullopt;
    return v;
}

std::optional<std::uint64_t> content_length(const HeaderMap& headers)
{
    std::optional<std::uint64_t> result;
    for (const auto& h : headers) {
        if (!iequals(h.name, "Content-Length"))
            continue;
        auto v = parse_decimal(h.value);
        if (!v || (result && *result != *v))
            throw HttpParseError("invalid Content-Length");
        result = v;
    }
    return result;
}

std::optional<BodyFraming> transfer_framing(const HeaderMap& headers)
{
    auto te = headers.get("Transfer-Encoding");
    if (!te)
        return std::nullopt;
    std::string_view codings = *te;
    std::size_t last_comma = codings.rfind(',');
    std::string_view last = trim_ows(last_comma == std::string_view::npos ? codings : codings.substr(last_comma + 1));
    if (!iequals(last, "chunked"))
        throw HttpParseError(fmt::format("unsupported Transfer-Encoding '{}'", codings));
    return BodyFraming{BodyKind::Chunked, 0};
}

std::uint64_t parse_chunk_size(std::string_view line)
{
    line = trim_ows(line.substr(0, line.find(';')));
    std::uint64_t size = 0;
    auto [ptr, ec] = std::from_chars(line.data(), line.data() + line.size(), size, 16);
    if (line.empty() || ec != std::errc{} || ptr != line.data() + line.size())
        throw IoError(fmt::format("bad chunk size line '{}'", line));
    return size;
}

template <typename Sink>
std::uint64_t copy_exact(BufferedReader& in, std::uint64_t n, Sink&& sink)
{
    std::array<char, kRelayChunk> buf;
    std::uint64_t done = 0;
    while (done < n) {
        std::size_t want = static_cast<std::size_t>(std::min<std::uint64_t>(buf.size(), n - done));
        std::size_t got = in.read_some(std::span<char>(buf.data(), want));
        if (got == 0)
            throw IoError("peer closed in the middle of a body");
        sink(std::string_view(buf.data(), got));
        done += got;
    }
    return done;
}

template <typename Sink>
std::uint64_t copy_chunked(BufferedReader& in, bool passthrough, Sink&& sink)
{
    std::uint64_t total = 0;
    for (;;) {
        std::string line = in.read_line(4096);
        std::uint64_t size = parse_chunk_size(line);
        if (passthrough)
            sink(line + "\r\n");
        if (size == 0) {
            for (;;) {
                std::string trailer = in.read_line(8192);
                if (passthrough)
                    sink(trailer + "\r\n");
                if (trailer.empty())
                    return total;
            }
        }
        total += copy_exact(in, size, sink);
        if (!in.read_line(2).empty())
            throw IoError("missing CRLF after chunk data");
        if (passthrough)
            sink("\r\n");
    }
}

template <typename Sink>
std::uint64_t copy_body(BufferedReader& in, const BodyFraming& framing, bool passthrough, Sink&& sink)
{
    switch (framing.kind) {
    case BodyKind::None:
        return 0;
    case BodyKind::Length:
        return copy_exact(in, framing.length, sink);
    case BodyKind::Chunked:
        return copy_chunked(in, passthrough, sink);
    case BodyKind::UntilClose: {
        std::array<char, kRelayChunk> buf;
        std::uint64_t total = 0;
        while (std::size_t got = in.read_some(buf)) {
            sink(std::string_view(buf.data(), got));
            total += got;
        }
        return total;
    }
    }
    return 0;
}

} // namespace

bool iequals(std::string_view a, std::string_view b) noexcept
{
    return a.size() == b.size() && std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
               return std::tolower(static_cast<unsigned char>(x)) == std::tolower(static_cast<unsigned char>(y));
           });
}

void HeaderMap::add(std::string name, std::string value)
{
    headers_.push_back(Header{std::move(name), std::move(value)});
}

void HeaderMap::set(std::string_view name, std::string value)
{
    remove(name);
    add(std::string(name), std::move(value));
}

std::optional<std::string_view> HeaderMap::get(std::string_view name) const
{
    for (const auto& h : headers_) {
        if (iequals(h.name, name))
            return h.value;
    }
    return std::nullopt;
}

std::size_t HeaderMap::remove(std::string_view name)
{
    return std::erase_if(headers_, [&](const Header& h) { return iequals(h.name, name); });
}

bool HeaderMap::has_token(std::string_view name, std::string_view token) const
{
    for (const auto& h : headers_) {
        if (!iequals(h.name, name))
            continue;
        std::string_view v = h.value;
        while (!v.empty()) {
            std::size_t comma = v.find(',');
            if (iequals(trim_ows(v.substr(0, comma)), token))
                return true;
            if (comma == std::string_view::npos)
                break;
            v.remove_prefix(comma + 1);
        }
    }
    return false;
}

RequestHead parse_request_head(std::string_view head)
{
    auto lines = split_lines(head);
    auto first = std::find_if(lines.begin(), lines.end(), [](std::string_view l) { return !l.empty(); });
    if (first == lines.end())
        throw HttpParseError("empty request");
    std::string_view line = *first;
    std::size_t sp1 = line.find(' ');
    std::size_t sp2 = sp1 == std::string_view::npos ? sp1 : line.find(' ', sp1 + 1);
    if (sp2 == std::string_view::npos || line.find(' ', sp2 + 1) != std::string_view::npos)
        throw HttpParseError(fmt::format("malformed request line '{}'", line));
    RequestHead req;
    req.method = line.substr(0, sp1);
    req.target = line.substr(sp1 + 1, sp2 - sp1 - 1);
    req.version = line.substr(sp2 + 1);
    if (!is_token(req.method) || req.target.empty() || !valid_version(req.version))
        throw HttpParseError(fmt::format("malformed request line '{}'", line));
    parse_header_lines(std::span(first + 1, lines.end()), req.headers);
    return req;
}

ResponseHead parse_response_head(std::string_view head)
{
    auto lines = split_lines(head);
    if (lines.empty())
        throw HttpParseError("empty response");
    std::string_view line = lines.front();
    ResponseHead resp;
    std::size_t sp1 = line.find(' ');
    if (sp1 == std::string_view::npos)
        throw HttpParseError(fmt::format("malformed status line '{}'", line));
    resp.version = line.substr(0, sp1);
    std::string_view rest = line.substr(sp1 + 1);
    std::string_view code = rest.substr(0, 3);
    auto status = parse_decimal(code);
    if (!valid_version(resp.version) || !status || code.size() != 3 || (rest.size() > 3 && rest[3] != ' '))
        throw HttpParseError(fmt::format("malformed status line '{}'", line));
    resp.status = static_cast<int>(*status);
    resp.reason = rest.size() > 4 ? rest.substr(4) : std::string_view{};
    parse_header_lines(std::span(lines.begin() + 1, lines.end()), resp.headers);
    return resp;
}

std::string serialize(const RequestHead& head)
{
    std::string out = fmt::format("{} {} {}\r\n", head.method, head.target, head.version);
    for (const auto& h : head.headers)
        out += fmt::format("{}: {}\r\n", h.name, h.value);
    out += "\r\n";
    return out;
}

std::string serialize(const ResponseHead& head)
{
    std::string out = fmt::format("{} {:03d} {}\r\n", head.version, head.status, head.reason);
    for (const auto& h : head.headers)
        out += fmt::format("{}: {}\r\n", h.name, h.value);
    out += "\r\n";
    return out;
}

std::string_view reason_phrase(int status) noexcept
{
    switch (status) {
    case 200:
        return "OK";
    case 204:
        return "No Content";
    case 302:
        return "Found";
    case 303:
        return "See Other";
    case 400:
        return "Bad Request";
    case 401:
        return "Unauthorized";
    case 403:
        return "Forbidden";
    case 404:
        return "Not Found";
    case 405:
        return "Method Not Allowed";
    case 413:
        return "Content Too Large";
    case 431:
        return "Request Header Fields Too Large";
    case 500:
        return "Internal Server Error";
    case 501:
        return "Not Implemented";
    case 502:
        return "Bad Gateway";
    case 503:
        return "Service Unavailable";
    case 504:
        return "Gateway Timeout";
    default:
        return "Unknown";
    }
}

void strip_hop_by_hop(HeaderMap& headers)
{
    std::vector<std::string> named;
    for (const auto& h : headers) {
        if (!iequals(h.name, "Connection"))
            continue;
        std::string_view v = h.value;
        while (!v.empty()) {
            std::size_t comma = v.find(',');
            if (auto tok = trim_ows(v.substr(0, comma)); !tok.empty())
                named.emplace_back(tok);
            if (comma == std::string_view::npos)
                break;
            v.remove_prefix(comma + 1);
        }
    }
    for (std::string_view name : {"Connection", "Keep-Alive", "Proxy-Authenticate", "Proxy-Authorization",
                                  "Proxy-Connection", "TE", "Trailer", "Transfer-Encoding", "Upgrade"})
        headers.remove(name);
    for (const auto& name : named)
        headers.remove(name);
}

bool wants_keep_alive(const RequestHead& head)
{
    if (head.headers.has_token("Connection", "close"))
        return false;
    if (head.version == "HTTP/1.0")
        return head.headers.has_token("Connection", "keep-alive");
    return true;
}

BodyFraming request_framing(const RequestHead& head)
{
    auto te = transfer_framing(head.headers);
    auto cl = content_length(head.headers);
    if (te && cl)
        throw HttpParseError("both Transfer-Encoding and Content-Length present");
    if (te)
        return *te;
    if (cl && *cl > 0)
        return BodyFraming{BodyKind::Length, *cl};
    return BodyFraming{};
}

BodyFraming response_framing(std::string_view request_method, const ResponseHead& head)
{
    if (request_method == "HEAD" || (head.status >= 100 && head.status < 200) || head.status == 204 ||
        head.status == 304)
        return BodyFraming{};
    if (auto te = transfer_framing(head.headers))
        return *te;
    if (auto cl = content_length(head.headers))
        return BodyFraming{BodyKind::Length, *cl};
    return BodyFraming{BodyKind::UntilClose, 0};
}

std::uint64_t relay_body(BufferedReader& in, Socket& out, const BodyFraming& framing, bool chunk_passthrough)
{
    return copy_body(in, framing, chunk_passthrough, [&](std::string_view piece) { out.write_all(piece); });
}

std::string read_body(BufferedReader& in, const BodyFraming& framing, std::size_t limit)
{
    if (framing.kind == BodyKind::Length && framing.length > limit)
        throw HttpParseError("body too large");
    std::string body;
    copy_body(in, framing, false, [&](std::string_view piece) {
        if (body.size() + piece.size() > limit)
            throw HttpParseError("body too large");
        body.append(piece);
    });
    return body;
}

ResolvedTarget reconstruct_uri(const RequestHead& request)
{
    const std::string& target = request.target;
    if (target.starts_with('/')) {
        std::size_t host_count = 0;
        std::string_view host_value;
        for (const auto& h : request.headers) {
            if (iequals(h.name, "Host")) {
                ++host_count;
                host_value = h.value;
            }
        }
        if (host_count == 0)
            throw HttpParseError("origin-form request without a Host header");
        if (host_count > 1)
            throw HttpParseError("multiple Host headers");
        auto hp = parse_host_port(host_value);
        if (!hp)
            throw HttpParseError(fmt::format("invalid Host header '{}'", host_value));
        std::string absolute = make_absolute_uri(hp->host, hp->port, target);
        return ResolvedTarget{std::move(hp->host), hp->port, target, std::move(absolute)};
    }
    if (auto uri = parse_absolute_uri(target))
        return ResolvedTarget{std::move(uri->host), uri->port, std::move(uri->path), target};
    throw HttpParseError(fmt::format("unsupported request target '{}'", target));
}

void write_simple_response(Socket& out, int status, std::string_view content_type, std::string_view body,
                           bool keep_alive, const HeaderMap& extra)
{
    ResponseHead head;
    head.version = "HTTP/1.1";
    head.status = status;
    head.reason = reason_phrase(status);
    head.headers.add("Content-Type", std::string(content_type));
    head.headers.add("Content-Length", std::to_string(body.size()));
    for (const auto& h : extra)
        head.headers.add(h.name, h.value);
    head.headers.add("Connection", keep_alive ? "keep-alive" : "close");
    std::string wire = serialize(head);
    wire.append(body);
    out.write_all(wire);
}

} // namespace ipgate
