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

#include "ipgate/session_store.hpp"

#include <filesystem>
#include <mutex>

struct sqlite3;

namespace ipgate {

/// Session store in an SQLite database using the two-table layout
///
///     addresses(ip, user, end_time, last_activity)
///     `groups`(user, `group`)
///
/// Several processes may share one database file; every operation runs in
/// an immediate transaction. The connection is opened lazily and reopened
/// after a failure, so a store that is unreachable at startup recovers once
/// the file becomes reachable. Failures surface as StoreUnavailable.
class SqliteSessionStore final : public SessionStore {
public:
    explicit SqliteSessionStore(std::filesystem::path path, StoreOptions options = {});
    ~SqliteSessionStore() override;

    SqliteSessionStore(const SqliteSessionStore&) = delete;
    SqliteSessionStore& operator=(const SqliteSessionStore&) = delete;

    SessionRecord insert_session(Ipv4Address ip, std::string_view user,
                                 std::span<const std::string> groups, Seconds duration,
                                 TimePoint now) override;
    std::size_t purge_expired(TimePoint now) override;
    AuthDecision lookup(Ipv4Address ip, std::string_view group, TimePoint now) override;
    bool logout(Ipv4Address ip) override;
    std::optional<SessionRecord> find(Ipv4Address ip) override;
    std::vector<SessionRecord> sessions() override;
    std::vector<GroupMembership> memberships() override;

private:
    sqlite3* connection();
    void reset_connection();
    std::size_t purge_in_txn(sqlite3* db, TimePoint now);

    template <typename Fn>
    auto transaction(Fn&& fn);

    std::filesystem::path path_;
    StoreOptions options_;
    std::mutex mutex_;
    sqlite3* db_ = nullptr;
};

} // namespace ipgate
