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


// Inspects and edits a session store by hand.

#include "ipgate/clock.hpp"
#include "ipgate/session_store.hpp"

#include "tool_logging.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>

#include <iostream>

using namespace ipgate;

namespace {

std::vector<std::string> split_groups(const std::string& text)
{
    std::vector<std::string> out;
    std::size_t start = 0;
    for (;;) {
        std::size_t comma = text.find(',', start);
        out.push_back(text.substr(start, comma - start));
        if (comma == std::string::npos)
            return out;
        start = comma + 1;
    }
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Inspect and edit an ipgate session store"};
    app.require_subcommand(1);
    std::string store_locator;
    app.add_option("--store", store_locator, "Session store: sqlite:PATH")->required();

    std::string ip_text, user, group_list;
    long duration = 0;
    auto* insert = app.add_subcommand("insert", "Start a session for an address");
    insert->add_option("ip", ip_text)->required();
    insert->add_option("user", user)->required();
    insert->add_option("groups", group_list, "Comma-separated")->required();
    insert->add_option("duration", duration, "Seconds")->required()->check(CLI::PositiveNumber);

    auto* logout = app.add_subcommand("logout", "End the session of an address");
    logout->add_option("ip", ip_text)->required();

    auto* list = app.add_subcommand("list", "Print sessions and memberships");

    std::size_t purged = 0;
    auto* purge = app.add_subcommand("purge", "Remove expired sessions");
    CLI11_PARSE(app, argc, argv);

    tools::log_to_stderr(spdlog::level::warn);
    try {
        auto store = open_session_store(store_locator);
        SystemClock clock;
        if (*insert) {
            auto groups = split_groups(group_list);
            SessionRecord rec =
                store->insert_session(Ipv4Address::from_string(ip_text), user, groups, Seconds{duration}, clock.now());
            fmt::print("{} {} until {}\n", rec.ip.to_string(), rec.user, format_utc(rec.end_time));
        } else if (*logout) {
            if (!store->logout(Ipv4Address::from_string(ip_text))) {
                fmt::print(stderr, "no session for {}\n", ip_text);
                return 1;
            }
        } else if (*list) {
            for (const SessionRecord& r : store->sessions())
                fmt::print("session {} {} end={} last={}\n", r.ip.to_string(), r.user, format_utc(r.end_time),
                           format_utc(r.last_activity));
            for (const GroupMembership& m : store->memberships())
                fmt::print("member {} {}\n", m.user, m.group);
        } else if (*purge) {
            purged = store->purge_expired(clock.now());
            fmt::print("purged {}\n", purged);
        }
    } catch (const std::exception& e) {
        fmt::print(stderr, "ipgate-session: {}\n", e.what());
        return 1;
    }
    return 0;
}
