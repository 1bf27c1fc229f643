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

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>

namespace ipgate {

/// Percent-encodes everything outside the RFC 3986 unreserved set.
std::string url_encode(std::string_view text);

/// Decodes %XX escapes; with plus_as_space, '+' becomes ' ' (form bodies).
/// nullopt on a truncated or non-hex escape.
std::optional<std::string> url_decode(std::string_view text, bool plus_as_space = false);

/// Parses an application/x-www-form-urlencoded body or query string. Later
/// duplicates overwrite earlier ones; undecodable pairs are skipped.
std::map<std::string, std::string> parse_form(std::string_view body);

std::string html_escape(std::string_view text);

struct HostPort {
    std::string host; ///< lowercase
    std::uint16_t port = 80;

    bool operator==(const HostPort&) const = default;
};

/// "host" or "host:port". Rejects userinfo, IPv6 literals, empty hosts,
/// characters outside [A-Za-z0-9.-_] and ports outside 1-65535.
std::optional<HostPort> parse_host_port(std::string_view authority, std::uint16_t default_port = 80);

struct AbsoluteUri {
    std::string host;
    std::uint16_t port = 80;
    std::string path; ///< starts with '/', includes any query

    bool operator==(const AbsoluteUri&) const = default;
};

/// http://host[:port][/path]; the scheme is matched case-insensitively.
std::optional<AbsoluteUri> parse_absolute_uri(std::string_view uri);

/// "http://" + host [+ ":" + port when port != 80] + path
std::string make_absolute_uri(std::string_view host, std::uint16_t port, std::string_view path);

} // namespace ipgate
