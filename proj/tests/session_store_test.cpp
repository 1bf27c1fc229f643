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


#include "ipgate/session_store.hpp"
#include "ipgate/sqlite_session_store.hpp"

#include "store_oracle.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <map>
#include <random>
#include <set>
#include <thread>

using namespace ipgate;
using namespace ipgate::test;

namespace {

const StoreFactory kMemory{"memory", [](const std::filesystem::path&, StoreOptions o) {
                               return std::make_unique<InMemorySessionStore>(o);
                           }};
const StoreFactory kSqlite{"sqlite", [](const std::filesystem::path& dir, StoreOptions o) {
                               return std::make_unique<SqliteSessionStore>(dir / "sessions.db", o);
                           }};

class StoreTest : public ::testing::TestWithParam<StoreFactory> {
protected:
    std::unique_ptr<SessionStore> make(StoreOptions o = {}) { return GetParam().make(dir_.path(), o); }

    TempDir dir_;
};

const auto kInternet = groups({"internet"});

} // namespace

TEST_P(StoreTest, InsertThenLookupInEveryListedGroup)
{
    auto store = make();
    auto gs = groups({"internet", "staff"});
    SessionRecord r = store->insert_session(ip("10.0.0.5"), "alice", gs, Seconds{300}, t0);
    EXPECT_EQ(r.end_time, t0 + Seconds{300});
    EXPECT_EQ(store->lookup(ip("10.0.0.5"), "internet", t0), AuthDecision::ok("alice"));
    EXPECT_EQ(store->lookup(ip("10.0.0.5"), "staff", t0), AuthDecision::ok("alice"));
}

TEST_P(StoreTest, InsertRejectsBadArguments)
{
    auto store = make();
    EXPECT_THROW(store->insert_session(ip("10.0.0.5"), "alice", kInternet, Seconds{0}, t0), std::invalid_argument);
    EXPECT_THROW(store->insert_session(ip("10.0.0.5"), "alice", kInternet, Seconds{-5}, t0), std::invalid_argument);
    EXPECT_THROW(store->insert_session(ip("10.0.0.5"), "alice", {}, Seconds{60}, t0), std::invalid_argument);
    EXPECT_THROW(store->insert_session(ip("10.0.0.5"), "al ice", kInternet, Seconds{60}, t0), std::invalid_argument);
    EXPECT_THROW(store->insert_session(ip("10.0.0.5"), "", kInternet, Seconds{60}, t0), std::invalid_argument);
    EXPECT_TRUE(store->sessions().empty());
}

TEST_P(StoreTest, SameAddressReplacesEarlierSession)
{
    auto store = make();
    store->insert_session(ip("10.0.0.5"), "alice", kInternet, Seconds{300}, t0);
    store->insert_session(ip("10.0.0.5"), "bob", kInternet, Seconds{600}, t0 + Seconds{10});
    auto all = store->sessions();
    ASSERT_EQ(all.size(), 1u);
    EXPECT_EQ(all[0].user, "bob");
    EXPECT_EQ(all[0].end_time, t0 + Seconds{610});
    // alice has no session left, so her membership went with it.
    for (const auto& m : store->memberships())
        EXPECT_NE(m.user, "alice");
}

TEST_P(StoreTest, PurgeRemovesExpiredAndOrphans)
{
    auto store = make();
    store->insert_session(ip("10.0.0.1"), "a", kInternet, Seconds{100}, t0 - Seconds{101});
    store->insert_session(ip("10.0.0.2"), "b", kInternet, Seconds{100}, t0 - Seconds{105});
    store->insert_session(ip("10.0.0.3"), "c", kInternet, Seconds{100}, t0);
    EXPECT_EQ(store->purge_expired(t0), 2u);
    auto all = store->sessions();
    ASSERT_EQ(all.size(), 1u);
    EXPECT_EQ(all[0].user, "c");
    EXPECT_EQ(store->memberships(), (std::vector<GroupMembership>{{"c", "internet"}}));
    EXPECT_EQ(store->purge_expired(t0), 0u);
}

TEST_P(StoreTest, PurgeOfEmptyStoreIsZero)
{
    auto store = make();
    EXPECT_EQ(store->purge_expired(t0), 0u);
}

TEST_P(StoreTest, SessionIsLiveThroughItsEndSecond)
{
    auto store = make();
    store->insert_session(ip("10.0.0.5"), "alice", kInternet, Seconds{300}, t0);
    EXPECT_TRUE(store->lookup(ip("10.0.0.5"), "internet", t0 + Seconds{300}).is_ok());
    EXPECT_FALSE(store->lookup(ip("10.0.0.5"), "internet", t0 + Seconds{301}).is_ok());
    EXPECT_FALSE(store->find(ip("10.0.0.5")).has_value());
}

TEST_P(StoreTest, LookupExamples)
{
    auto store = make();
    store->insert_session(ip("10.0.0.5"), "alice", kInternet, Seconds{300}, t0);
    EXPECT_EQ(store->lookup(ip("10.0.0.5"), "admins", t0), AuthDecision::err());
    EXPECT_EQ(store->lookup(ip("10.0.0.6"), "internet", t0), AuthDecision::err());
    EXPECT_EQ(store->lookup(ip("10.0.0.5"), "internet", t0), AuthDecision::ok("alice"));
    EXPECT_EQ(store->lookup(ip("10.0.0.5"), "internet", t0 + Seconds{301}), AuthDecision::err());
}

TEST_P(StoreTest, Logout)
{
    auto store = make();
    store->insert_session(ip("10.0.0.5"), "alice", kInternet, Seconds{300}, t0);
    EXPECT_TRUE(store->logout(ip("10.0.0.5")));
    EXPECT_FALSE(store->lookup(ip("10.0.0.5"), "internet", t0).is_ok());
    EXPECT_TRUE(store->memberships().empty());
    EXPECT_FALSE(store->logout(ip("10.0.0.5")));
    EXPECT_FALSE(store->logout(ip("10.9.9.9")));
    EXPECT_EQ(store->purge_expired(t0 + Seconds{1000}), 0u);
}

TEST_P(StoreTest, MembershipSurvivesWhileUserHasAnotherSession)
{
    auto store = make();
    store->insert_session(ip("10.0.0.1"), "alice", groups({"internet"}), Seconds{300}, t0);
    store->insert_session(ip("10.0.0.2"), "alice", groups({"admins"}), Seconds{600}, t0);
    store->logout(ip("10.0.0.2"));
    // Memberships belong to the user, not the address.
    EXPECT_TRUE(store->lookup(ip("10.0.0.1"), "admins", t0).is_ok());
}

TEST_P(StoreTest, InactivityWindowPurgesIdleSessions)
{
    auto store = make(StoreOptions{Seconds{60}});
    store->insert_session(ip("10.0.0.5"), "alice", kInternet, Seconds{3600}, t0);
    EXPECT_TRUE(store->lookup(ip("10.0.0.5"), "internet", t0 + Seconds{50}).is_ok());
    // The lookup at t0+50 refreshed activity, so t0+110 is still inside the window.
    EXPECT_TRUE(store->lookup(ip("10.0.0.5"), "internet", t0 + Seconds{110}).is_ok());
    EXPECT_FALSE(store->lookup(ip("10.0.0.5"), "internet", t0 + Seconds{171}).is_ok());
    EXPECT_TRUE(store->sessions().empty());
}

TEST_P(StoreTest, InactivityDisabledByDefault)
{
    auto store = make();
    store->insert_session(ip("10.0.0.5"), "alice", kInternet, Seconds{3600}, t0);
    EXPECT_TRUE(store->lookup(ip("10.0.0.5"), "internet", t0 + Seconds{3000}).is_ok());
}

TEST_P(StoreTest, ConcurrentInsertsAndLookups)
{
    auto store = make();
    std::vector<std::thread> threads;
    for (int t = 0; t < 4; ++t) {
        threads.emplace_back([&, t] {
            for (int i = 0; i < 25; ++i) {
                Ipv4Address a{0x0a000000u + static_cast<std::uint32_t>(t * 100 + i)};
                std::string user = "u" + std::to_string(t);
                store->insert_session(a, user, kInternet, Seconds{300}, t0);
                EXPECT_EQ(store->lookup(a, "internet", t0), AuthDecision::ok(user));
            }
        });
    }
    for (auto& th : threads)
        th.join();
    EXPECT_EQ(store->sessions().size(), 100u);
}

INSTANTIATE_TEST_SUITE_P(Backends, StoreTest, ::testing::Values(kMemory, kSqlite),
                         [](const auto& info) { return std::string(info.param.name); });


TEST(SessionStoreOracle, InMemoryMatchesBruteForceOver1000RandomStores)
{
    auto started = std::chrono::steady_clock::now();
    OracleResult r = run_oracle(kMemory, 1000, 20260101);
    EXPECT_EQ(r.cases, 1000);
    EXPECT_EQ(r.mismatches, 0) << r.first_failure;
    EXPECT_LT(std::chrono::steady_clock::now() - started, std::chrono::seconds(10));
}

TEST(SessionStoreOracle, SqliteMatchesBruteForce)
{
    OracleResult r = run_oracle(kSqlite, 40, 424242);
    EXPECT_EQ(r.mismatches, 0) << r.first_failure;
}

// --- sqlite specifics -------------------------------------------------------

TEST(SqliteSessionStore, UsesTheTwoTableSchema)
{
    TempDir dir;
    {
        SqliteSessionStore store(dir.path() / "s.db");
        store.insert_session(ip("10.0.0.5"), "alice", kInternet, Seconds{300}, t0);
    }
    // A second connection (another helper process, say) sees the same data.
    SqliteSessionStore other(dir.path() / "s.db");
    EXPECT_EQ(other.lookup(ip("10.0.0.5"), "internet", t0), AuthDecision::ok("alice"));
}

TEST(SqliteSessionStore, UnreachableDatabaseRaisesStoreUnavailable)
{
    SqliteSessionStore store("/nonexistent-dir/for/ipgate/s.db");
    EXPECT_THROW(store.lookup(ip("10.0.0.5"), "internet", t0), StoreUnavailable);
    EXPECT_THROW(store.insert_session(ip("10.0.0.5"), "alice", kInternet, Seconds{60}, t0), StoreUnavailable);
}

TEST(OpenSessionStore, Locators)
{
    TempDir dir;
    EXPECT_NE(dynamic_cast<InMemorySessionStore*>(open_session_store("memory:").get()), nullptr);
    auto path = "sqlite:" + (dir.path() / "x.db").string();
    EXPECT_NE(dynamic_cast<SqliteSessionStore*>(open_session_store(path).get()), nullptr);
    EXPECT_THROW(open_session_store("mysql://db"), std::invalid_argument);
}

TEST(Identifiers, Validity)
{
    EXPECT_TRUE(is_valid_identifier("alice"));
    EXPECT_TRUE(is_valid_identifier("a.b-c_d@example"));
    EXPECT_FALSE(is_valid_identifier(""));
    EXPECT_FALSE(is_valid_identifier("a b"));
    EXPECT_FALSE(is_valid_identifier("a\tb"));
    EXPECT_FALSE(is_valid_identifier("a\nb"));
    EXPECT_FALSE(is_valid_identifier(std::string("a\x7f", 2)));
}
