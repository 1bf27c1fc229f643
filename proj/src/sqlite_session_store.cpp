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

#include "ipgate/sqlite_session_store.hpp"

#include <sqlite3.h>

#include <algorithm>

#include <fmt/format.h>

namespace ipgate {

namespace {

constexpr const char* kSchema = R"sql(
CREATE TABLE IF NOT EXISTS addresses (
    ip            TEXT PRIMARY KEY,
    user          TEXT NOT NULL,
    end_time      INTEGER NOT NULL,
    last_activity INTEGER NOT NULL
);
CREATE TABLE IF NOT EXISTS `groups` (
    user    TEXT NOT NULL,
    `group` TEXT NOT NULL,
    PRIMARY KEY (user, `group`)
);
)sql";

constexpr const char* kDeleteExpired = "DELETE FROM addresses WHERE `end_time` < ?1";
constexpr const char* kDeleteIdle = "DELETE FROM addresses WHERE `last_activity` + ?2 < ?1";
constexpr const char* kDeleteOrphans =
    "DELETE FROM `groups` WHERE NOT EXISTS "
    "(SELECT `user` FROM `addresses` WHERE `user` = `groups`.`user`)";
constexpr const char* kSelectUser =
    "SELECT `addresses`.`user` FROM `addresses` JOIN `groups` USING(`user`) "
    "WHERE `addresses`.`ip` = ?1 AND `groups`.`group` = ?2 LIMIT 0, 1";

[[noreturn]] void fail(sqlite3* db, std::string_view what)
{
    throw StoreUnavailable(fmt::format("sqlite {}: {}", what, db ? sqlite3_errmsg(db) : "no connection"));
}

class Statement {
public:
    Statement(sqlite3* db, const char* sql) : db_(db)
    {
        if (sqlite3_prepare_v2(db, sql, -1, &stmt_, nullptr) != SQLITE_OK)
            fail(db, "prepare");
    }
    ~Statement() { sqlite3_finalize(stmt_); }
    Statement(const Statement&) = delete;
    Statement& operator=(const Statement&) = delete;

    Statement& bind(int idx, std::string_view text)
    {
        if (sqlite3_bind_text(stmt_, idx, text.data(), static_cast<int>(text.size()), SQLITE_TRANSIENT) !=
            SQLITE_OK)
            fail(db_, "bind");
        return *this;
    }
    Statement& bind(int idx, std::int64_t v)
    {
        if (sqlite3_bind_int64(stmt_, idx, v) != SQLITE_OK)
            fail(db_, "bind");
        return *this;
    }

    /// true while a row is available
    bool step()
    {
        int rc = sqlite3_step(stmt_);
        if (rc == SQLITE_ROW)
            return true;
        if (rc == SQLITE_DONE)
            return false;
        fail(db_, "step");
    }

    void run()
    {
        while (step()) {
        }
    }

    std::string text(int col) const
    {
        auto p = reinterpret_cast<const char*>(sqlite3_column_text(stmt_, col));
        return p ? std::string(p, static_cast<std::size_t>(sqlite3_column_bytes(stmt_, col))) : std::string{};
    }
    std::int64_t integer(int col) const { return sqlite3_column_int64(stmt_, col); }

private:
    sqlite3* db_;
    sqlite3_stmt* stmt_ = nullptr;
};

void exec(sqlite3* db, const char* sql)
{
    char* err = nullptr;
    if (sqlite3_exec(db, sql, nullptr, nullptr, &err) != SQLITE_OK) {
        std::string msg = err ? err : "unknown error";
        sqlite3_free(err);
        throw StoreUnavailable(fmt::format("sqlite exec: {}", msg));
    }
}

std::int64_t epoch(TimePoint t)
{
    return t.time_since_epoch().count();
}

SessionRecord read_record(const Statement& st)
{
    return SessionRecord{Ipv4Address::from_string(st.text(0)), st.text(1), TimePoint{Seconds{st.integer(2)}},
                         TimePoint{Seconds{st.integer(3)}}};
}

} // namespace

SqliteSessionStore::SqliteSessionStore(std::filesystem::path path, StoreOptions options)
    : path_(std::move(path)), options_(options)
{
}

SqliteSessionStore::~SqliteSessionStore()
{
    reset_connection();
}

void SqliteSessionStore::reset_connection()
{
    if (db_) {
        sqlite3_close_v2(db_);
        db_ = nullptr;
    }
}

sqlite3* SqliteSessionStore::connection()
{
    if (db_)
        return db_;
    sqlite3* db = nullptr;
    int rc = sqlite3_open_v2(path_.c_str(), &db, SQLITE_OPEN_READWRITE | SQLITE_OPEN_CREATE | SQLITE_OPEN_NOMUTEX,
                             nullptr);
    if (rc != SQLITE_OK) {
        std::string msg = db ? sqlite3_errmsg(db) : sqlite3_errstr(rc);
        sqlite3_close_v2(db);
        throw StoreUnavailable(fmt::format("cannot open session database {}: {}", path_.string(), msg));
    }
    sqlite3_busy_timeout(db, 5000);
    try {
        exec(db, kSchema);
    } catch (...) {
        sqlite3_close_v2(db);
        throw;
    }
    db_ = db;
    return db_;
}

template <typename Fn>
auto SqliteSessionStore::transaction(Fn&& fn)
{
    std::lock_guard lock(mutex_);
    try {
        sqlite3* db = connection();
        exec(db, "BEGIN IMMEDIATE");
        try {
            auto result = fn(db);
            exec(db, "COMMIT");
            return result;
        } catch (const StoreUnavailable&) {
            sqlite3_exec(db, "ROLLBACK", nullptr, nullptr, nullptr);
            throw;
        }
    } catch (const StoreUnavailable&) {
        reset_connection();
        throw;
    }
}

std::size_t SqliteSessionStore::purge_in_txn(sqlite3* db, TimePoint now)
{
    Statement(db, kDeleteExpired).bind(1, epoch(now)).run();
    auto removed = static_cast<std::size_t>(sqlite3_changes(db));
    if (options_.inactivity) {
        Statement(db, kDeleteIdle).bind(1, epoch(now)).bind(2, std::int64_t{options_.inactivity->count()}).run();
        removed += static_cast<std::size_t>(sqlite3_changes(db));
    }
    Statement(db, kDeleteOrphans).run();
    return removed;
}

SessionRecord SqliteSessionStore::insert_session(Ipv4Address ip, std::string_view user,
                                                 std::span<const std::string> groups, Seconds duration,
                                                 TimePoint now)
{
    detail::check_insert_args(user, groups, duration);
    SessionRecord rec{ip, std::string(user), now + duration, now};
    return transaction([&](sqlite3* db) {
        Statement(db, "INSERT OR REPLACE INTO addresses (ip, user, end_time, last_activity) VALUES (?1, ?2, ?3, ?4)")
            .bind(1, ip.to_string())
            .bind(2, rec.user)
            .bind(3, epoch(rec.end_time))
            .bind(4, epoch(rec.last_activity))
            .run();
        for (const auto& g : groups)
            Statement(db, "INSERT OR IGNORE INTO `groups` (user, `group`) VALUES (?1, ?2)")
                .bind(1, rec.user)
                .bind(2, g)
                .run();
        Statement(db, kDeleteOrphans).run();
        return rec;
    });
}

std::size_t SqliteSessionStore::purge_expired(TimePoint now)
{
    return transaction([&](sqlite3* db) { return purge_in_txn(db, now); });
}

AuthDecision SqliteSessionStore::lookup(Ipv4Address ip, std::string_view group, TimePoint now)
{
    return transaction([&](sqlite3* db) {
        purge_in_txn(db, now);
        Statement q(db, kSelectUser);
        q.bind(1, ip.to_string()).bind(2, group);
        if (!q.step())
            return AuthDecision::err();
        std::string user = q.text(0);
        if (options_.inactivity)
            Statement(db, "UPDATE addresses SET last_activity = ?1 WHERE ip = ?2")
                .bind(1, epoch(now))
                .bind(2, ip.to_string())
                .run();
        return AuthDecision::ok(std::move(user));
    });
}

bool SqliteSessionStore::logout(Ipv4Address ip)
{
    return transaction([&](sqlite3* db) {
        Statement(db, "DELETE FROM addresses WHERE ip = ?1").bind(1, ip.to_string()).run();
        bool removed = sqlite3_changes(db) > 0;
        Statement(db, kDeleteOrphans).run();
        return removed;
    });
}

std::optional<SessionRecord> SqliteSessionStore::find(Ipv4Address ip)
{
    return transaction([&](sqlite3* db) -> std::optional<SessionRecord> {
        Statement q(db, "SELECT ip, user, end_time, last_activity FROM addresses WHERE ip = ?1");
        q.bind(1, ip.to_string());
        if (!q.step())
            return std::nullopt;
        return read_record(q);
    });
}

std::vector<SessionRecord> SqliteSessionStore::sessions()
{
    auto out = transaction([&](sqlite3* db) {
        std::vector<SessionRecord> rows;
        Statement q(db, "SELECT ip, user, end_time, last_activity FROM addresses");
        while (q.step())
            rows.push_back(read_record(q));
        return rows;
    });
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.ip < b.ip; });
    return out;
}

std::vector<GroupMembership> SqliteSessionStore::memberships()
{
    return transaction([&](sqlite3* db) {
        std::vector<GroupMembership> rows;
        Statement q(db, "SELECT user, `group` FROM `groups` ORDER BY user, `group`");
        while (q.step())
            rows.push_back(GroupMembership{q.text(0), q.text(1)});
        return rows;
    });
}

} // namespace ipgate
