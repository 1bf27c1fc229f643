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


// External ACL helper for Squid:
//
//   external_acl_type ipgate ttl=300 negative_ttl=300 %SRC \
//       /usr/local/bin/ipgate-acl-helper --store sqlite:/var/lib/ipgate/sessions.db
//
// Reads one client address per line and answers "OK user=<name>" or "ERR".

#include "ipgate/clock.hpp"
#include "ipgate/helper.hpp"
#include "ipgate/session_store.hpp"

#include "tool_logging.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv)
{
    CLI::App app{"Squid external ACL helper backed by the ipgate session store"};
    std::string group = "internet";
    std::string store_locator;
    long inactivity = 0;
    app.add_option("--group", group, "Group a session must belong to")->capture_default_str();
    app.add_option("--store", store_locator, "Session store: memory: or sqlite:PATH")->required();
    app.add_option("--inactivity", inactivity, "Idle seconds after which a session ends (0: never)")
        ->check(CLI::NonNegativeNumber);
    CLI11_PARSE(app, argc, argv);

    ipgate::tools::log_to_stderr(spdlog::level::warn);
    std::ios::sync_with_stdio(false);

    ipgate::StoreOptions options;
    if (inactivity > 0)
        options.inactivity = ipgate::Seconds{inactivity};
    std::unique_ptr<ipgate::SessionStore> store;
    try {
        store = ipgate::open_session_store(store_locator, options);
    } catch (const std::exception& e) {
        spdlog::error("{}", e.what());
        return 2;
    }
    ipgate::SystemClock clock;
    return ipgate::run_helper_loop(std::cin, std::cout, group, *store, clock);
}
