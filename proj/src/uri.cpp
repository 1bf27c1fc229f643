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

#include "ipgate/uri.hpp"

#include <cctype>
#include <charconv>

#include <fmt/format.h>

namespace ipgate {

namespace {

bool is_unreserved(unsigned char c)
{
    return std::isalnum(c) || c == '-' || c == '.' || c == '_' || c == '~';
}

int hex_value(char c)
{
    if (c >= '0' && c <= '9')
        return c - '0';
    if (c >= 'a' && c <= 'f')
        return c - 'a' + 10;
    if (c >= 'A' && c <= 'F')
        return c - 'A' + 10;
    return -1;
}

std::string lowercase(std::string_view s)
{
    std::string out(s);
    for (char& c : out)
        c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

} // namespace

std::string url_encode(std::string_view text)
{
    static constexpr char kHex[] = "0123456789ABCDEF";
    std::string out;
    out.reserve(text.size());
    for (char ch : text) {
        auto c = static_cast<unsigned char>(ch);
        if (is_unreserved(c)) {
            out.push_back(ch);
        } else {
            out.push_back('%');
            out.push_back(kHex[c >> 4]);
            out.push_back(kHex[c & 0xf]);
        }
    }
    return out;
}

std::optional<std::string> url_decode(std::string_view text, bool plus_as_space)
{
    std::string out;
    out.reserve(text.size());
    for (std::size_t i = 0; i < text.size(); ++i) {
        char c = text[i];
        if (c == '%') {
            if (i + 2 >= text.size())
                return std::nullopt;
            int hi = hex_value(text[i + 1]);
            int lo = hex_value(text[i + 2]);
            if (hi < 0 || lo < 0)
                return std::nullopt;
            out.push_back(static_cast<char>(hi * 16 + lo));
            i += 2;
        } else if (c == '+' && plus_as_space) {
            out.push_back(' ');
        } else {
            out.push_back(c);
        }
    }
    return out;
}

std::map<std::string, std::string> parse_form(std::string_view body)
{
    std::map<std::string, std::string> fields;
    while (!body.empty()) {
        std::size_t amp = body.find('&');
        std::string_view pair = body.substr(0, amp);
        body = amp == std::string_view::npos ? std::string_view{} : body.substr(amp + 1);
        if (pair.empty())
            continue;
        std::size_t eq = pair.find('=');
        auto key = url_decode(pair.substr(0, eq), true);
        auto value = url_decode(eq == std::string_view::npos ? std::string_view{} : pair.substr(eq + 1), true);
        if (key && value)
            fields[*key] = *value;
    }
    return fields;
}

std::string html_escape(std::string_view text)
{
    std::string out;
    out.reserve(text.size());
    for (char c : text) {
        switch (c) {
        case '&':
            out += "&amp;";
            break;
        case '<':
            out += "&lt;";
            break;
        case '>':
            out += "&gt;";
            break;
        case '"':
            out += "&quot;";
            break;
        case '\'':
            out += "&#39;";
            break;
        default:
            out.push_back(c);
        }
    }
    return out;
}

std::optional<HostPort> parse_host_port(std::string_view authority, std::uint16_t default_port)
{
    if (authority.empty() || authority.find('@') != std::string_view::npos || authority.front() == '[')
        return std::nullopt;
    std::string_view host = authority;
    std::uint16_t port = default_port;
    if (std::size_t colon = authority.rfind(':'); colon != std::string_view::npos) {
        host = authority.substr(0, colon);
        std::string_view digits = authority.substr(colon + 1);
        unsigned value = 0;
        auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), value);
        if (digits.empty() || ec != std::errc{} || ptr != digits.data() + digits.size() || value == 0 ||
            value > 65535)
            return std::nullopt;
        port = static_cast<std::uint16_t>(value);
    }
    if (host.empty())
        return std::nullopt;
    for (char c : host) {
        auto u = static_cast<unsigned char>(c);
        if (!(std::isalnum(u) || c == '.' || c == '-' || c == '_'))
            return std::nullopt;
    }
    return HostPort{lowercase(host), port};
}

std::optional<AbsoluteUri> parse_absolute_uri(std::string_view uri)
{
    constexpr std::string_view scheme = "http://";
    if (uri.size() < scheme.size() || lowercase(uri.substr(0, scheme.size())) != scheme)
        return std::nullopt;
    std::string_view rest = uri.substr(scheme.size());
    std::size_t path_start = rest.find_first_of("/?#");
    auto hp = parse_host_port(rest.substr(0, path_start));
    if (!hp)
        return std::nullopt;
    std::string path = path_start == std::string_view::npos ? std::string("/") : std::string(rest.substr(path_start));
    if (path.front() != '/')
        path.insert(path.begin(), '/');
    if (auto hash = path.find('#'); hash != std::string::npos)
        path.erase(hash);
    return AbsoluteUri{std::move(hp->host), hp->port, std::move(path)};
}

std::string make_absolute_uri(std::string_view host, std::uint16_t port, std::string_view path)
{
    if (port == 80)
        return fmt::format("http://{}{}", host, path);
    return fmt::format("http://{}:{}{}", host, port, path);
}

} // namespace ipgate
