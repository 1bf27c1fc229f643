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

// Squid external ACL helper protocol.
//
// Squid writes one request per line (here: the client address, %SRC) and
// blocks until the helper answers with exactly one line:
//
//     OK user=<name>
//     ERR
//
// The helper never exits on bad input; a dead helper stalls the proxy.

#pragma once

#include "ipgate/clock.hpp"
#include "ipgate/ipv4.hpp"
#include "ipgate/session_store.hpp"

#include <iosfwd>
#include <stdexcept>
#include <string>
#include <string_view>

namespace ipgate {

class HelperParseError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct HelperQuery {
    std::string raw_line;
    Ipv4Address ip;
    std::string group;
};

struct HelperResponse {
    std::string line; ///< without the trailing LF
};

/// Trims the line, takes its first whitespace-separated token, %-decodes it
/// and parses an IPv4 address. Further tokens are ignored.
HelperQuery parse_helper_request(std::string_view line, std::string_view group);

HelperResponse format_helper_response(const AuthDecision& decision);

/// Answers every line of `in` on `out`, flushing after each answer. Returns
/// 0 at end of input.
int run_helper_loop(std::istream& in, std::ostream& out, std::string_view group, SessionStore& store,
                    const Clock& clock);

} // namespace ipgate
