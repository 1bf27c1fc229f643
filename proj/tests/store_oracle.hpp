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


// Randomised comparison of a session store against an independent model and
// a brute-force evaluation of lookup over the store's own rows.

#pragma once

#include "ipgate/session_store.hpp"

#include "support.hpp"

#include <algorithm>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <random>
#include <set>
#include <string>
#include <vector>

namespace ipgate::test {

struct StoreFactory {
    const char* name;
    std::function<std::unique_ptr<SessionStore>(const std::filesystem::path& dir, StoreOptions)> make;
};


// Independent model of the store: sessions keyed by address, group
// memberships per user that vanish once the user has no session left.
struct Model {
    std::map<Ipv4Address, std::pair<std::string, TimePoint>> sessions;
    std::map<std::string, std::set<std::string>> memberships;

    std::size_t sessions_of(const std::string& user) const
    {
        return std::count_if(sessions.begin(), sessions.end(), [&](const auto& kv) { return kv.second.first == user; });
    }
    void drop_orphans()
    {
        std::erase_if(memberships, [&](const auto& kv) { return sessions_of(kv.first) == 0; });
    }
    void insert(Ipv4Address a, const std::string& user, const std::vector<std::string>& gs, TimePoint end)
    {
        sessions[a] = {user, end};
        memberships[user].insert(gs.begin(), gs.end());
        drop_orphans();
    }
    std::size_t purge(TimePoint now)
    {
        std::size_t n = std::erase_if(sessions, [&](const auto& kv) { return kv.second.second < now; });
        drop_orphans();
        return n;
    }
    bool logout(Ipv4Address a)
    {
        bool had = sessions.erase(a) > 0;
        drop_orphans();
        return had;
    }
};

// lookup semantics evaluated directly over a snapshot of the store contents.
inline AuthDecision brute_force(const std::vector<SessionRecord>& rows, const std::vector<GroupMembership>& members,
                         Ipv4Address a, const std::string& group, TimePoint now)
{
    for (const SessionRecord& r : rows) {
        if (r.ip != a || r.end_time < now)
            continue;
        for (const GroupMembership& m : members)
            if (m.user == r.user && m.group == group)
                return AuthDecision::ok(r.user);
    }
    return AuthDecision::err();
}

struct OracleResult {
    int cases = 0;
    int mismatches = 0;
    std::string first_failure;
};

inline OracleResult run_oracle(const StoreFactory& factory, int cases, std::uint32_t seed)
{
    OracleResult result;
    std::mt19937 rng(seed);
    auto uniform = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
    const std::vector<std::string> group_pool{"internet", "admins", "staff", "guests"};

    for (int c = 0; c < cases; ++c) {
        TempDir dir;
        auto store = factory.make(dir.path(), {});
        Model model;
        auto fail = [&](const std::string& what) {
            if (result.mismatches++ == 0)
                result.first_failure = "case " + std::to_string(c) + ": " + what;
        };

        const int ip_pool = uniform(1, 60);
        const int user_pool = uniform(1, 8);
        auto random_ip = [&] { return Ipv4Address{0x0a000000u + static_cast<std::uint32_t>(uniform(1, ip_pool + 2))}; };

        const int rows = uniform(0, 50);
        for (int i = 0; i < rows; ++i) {
            Ipv4Address a = random_ip();
            std::string user = "user" + std::to_string(uniform(1, user_pool));
            std::vector<std::string> gs;
            for (const auto& g : group_pool)
                if (uniform(0, 2) == 0)
                    gs.push_back(g);
            if (gs.empty())
                gs.push_back(group_pool[uniform(0, 3)]);
            TimePoint at = t0 + Seconds{uniform(0, 1000)};
            Seconds d{uniform(1, 2000)};
            store->insert_session(a, user, gs, d, at);
            model.insert(a, user, gs, at + d);
        }

        std::vector<int> offsets(20);
        for (int& o : offsets)
            o = uniform(0, 3500);
        std::sort(offsets.begin(), offsets.end());

        for (int o : offsets) {
            TimePoint now = t0 + Seconds{o};
            Ipv4Address a = random_ip();
            const std::string& g = group_pool[uniform(0, 3)];
            switch (uniform(0, 5)) {
            case 0: {
                if (store->logout(a) != model.logout(a))
                    fail("logout result");
                break;
            }
            case 1: {
                auto snapshot = store->sessions();
                std::size_t expired = std::count_if(snapshot.begin(), snapshot.end(),
                                                    [&](const SessionRecord& r) { return r.end_time < now; });
                std::size_t removed = store->purge_expired(now);
                std::size_t modelled = model.purge(now);
                if (removed != expired || removed != modelled)
                    fail("purge count");
                for (const SessionRecord& r : store->sessions())
                    if (r.end_time < now)
                        fail("expired row survived purge");
                auto rows_after = store->sessions();
                for (const GroupMembership& m : store->memberships())
                    if (std::none_of(rows_after.begin(), rows_after.end(),
                                     [&](const SessionRecord& r) { return r.user == m.user; }))
                        fail("orphan membership " + m.user);
                if (store->purge_expired(now) != 0)
                    fail("second purge not idempotent");
                break;
            }
            default: {
                AuthDecision expected = brute_force(store->sessions(), store->memberships(), a, g, now);
                model.purge(now);
                AuthDecision modelled = AuthDecision::err();
                if (auto it = model.sessions.find(a); it != model.sessions.end() &&
                                                      model.memberships[it->second.first].contains(g))
                    modelled = AuthDecision::ok(it->second.first);
                model.drop_orphans();
                AuthDecision got = store->lookup(a, g, now);
                if (got != expected || got != modelled)
                    fail("lookup " + a.to_string() + " " + g + " at +" + std::to_string(o));
            }
            }
        }
        // Whole-store comparison with the model at the end of each case.
        auto rows_now = store->sessions();
        if (rows_now.size() != model.sessions.size())
            fail("session count");
        for (const SessionRecord& r : rows_now) {
            auto it = model.sessions.find(r.ip);
            if (it == model.sessions.end() || it->second.first != r.user || it->second.second != r.end_time)
                fail("session row " + r.ip.to_string());
        }
        std::set<std::pair<std::string, std::string>> want, got;
        for (const auto& [u, gs] : model.memberships)
            for (const auto& g : gs)
                want.emplace(u, g);
        for (const auto& m : store->memberships())
            got.emplace(m.user, m.group);
        if (want != got)
            fail("membership rows");
        ++result.cases;
    }
    return result;
}

} // namespace ipgate::test
