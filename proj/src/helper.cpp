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

#include "ipgate/helper.hpp"
#include "ipgate/uri.hpp"

#include <istream>
#include <ostream>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

namespace ipgate {

namespace {

constexpr std::string_view kWhitespace = " \t\r\n\v\f";

std::string_view trim(std::string_view s)
{
    std::size_t b = s.find_first_not_of(kWhitespace);
    if (b == std::string_view::npos)
        return {};
    std::size_t e = s.find_last_not_of(kWhitespace);
    return s.substr(b, e - b + 1);
}

} // namespace

HelperQuery parse_helper_request(std::string_view line, std::string_view group)
{
    std::string_view body = trim(line);
    std::string_view token = body.substr(0, body.find_first_of(kWhitespace));
    if (token.empty())
        throw HelperParseError("empty helper request");
    auto decoded = url_decode(token);
    if (!decoded)
        throw HelperParseError(fmt::format("bad %-escape in '{}'", token));
    auto ip = Ipv4Address::parse(*decoded);
    if (!ip)
        throw HelperParseError(fmt::format("not an IPv4 address: '{}'", *decoded));
    return HelperQuery{std::string(body), *ip, std::string(group)};
}

HelperResponse format_helper_response(const AuthDecision& decision)
{
    if (!decision.is_ok())
        return HelperResponse{"ERR"};
    // Store identifiers never hold whitespace; encoding keeps the line
    // well-formed even for a user that slipped past that check.
    return HelperResponse{"OK user=" + url_encode(*decision.user())};
}

int run_helper_loop(std::istream& in, std::ostream& out, std::string_view group, SessionStore& store,
                    const Clock& clock)
{
    std::string line;
    while (std::getline(in, line)) {
        AuthDecision decision = AuthDecision::err();
        try {
            HelperQuery q = parse_helper_request(line, group);
            decision = store.lookup(q.ip, q.group, clock.now());
        } catch (const HelperParseError& e) {
            spdlog::warn("helper: {}", e.what());
        } catch (const std::exception& e) {
            spdlog::error("helper: session store failure, answering ERR: {}", e.what());
        }
        out << format_helper_response(decision).line << '\n';
        out.flush();
    }
    return 0;
}

} // namespace ipgate
