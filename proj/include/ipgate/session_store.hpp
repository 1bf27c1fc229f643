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

// Table of authenticated client addresses.
//
// A store holds two relations: sessions (ip -> user, end time) and group
// memberships (user, group). Every lookup first purges expired sessions and
// any membership whose user no longer owns a session, then answers whether
// the address belongs to a user in the requested group.

#pragma once

#include "ipgate/clock.hpp"
#include "ipgate/ipv4.hpp"

#include <cstddef>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace ipgate {

struct SessionRecord {
    Ipv4Address ip;
    std::string user;
    TimePoint end_time;
    TimePoint last_activity;

    bool operator==(const SessionRecord&) const = default;
};

struct GroupMembership {
    std::string user;
    std::string group;

    auto operator<=>(const GroupMembership&) const = default;
};

class AuthDecision {
public:
    static AuthDecision ok(std::string user) { return AuthDecision{std::move(user)}; }
    static AuthDecision err() { return AuthDecision{}; }

    bool is_ok() const noexcept { return user_.has_value(); }
    const std::optional<std::string>& user() const noexcept { return user_; }

    bool operator==(const AuthDecision&) const = default;

private:
    AuthDecision() = default;
    explicit AuthDecision(std::string user) : user_(std::move(user)) {}

    std::optional<std::string> user_;
};

/// Raised when the backing storage cannot be reached. Callers on the access
/// path must treat it as a denial.
class StoreUnavailable : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct StoreOptions {
    /// When set, a session idle longer than this is purged, and every Ok
    /// lookup refreshes the session's last activity.
    std::optional<Seconds> inactivity;
};

/// True for non-empty identifiers free of whitespace and control bytes.
bool is_valid_identifier(std::string_view id) noexcept;

namespace detail {
/// Shared precondition check for insert_session implementations.
void check_insert_args(std::string_view user, std::span<const std::string> groups, Seconds duration);
} // namespace detail

class SessionStore {
public:
    virtual ~SessionStore() = default;

    /// Stores (ip, user, now + duration), replacing any record for ip, and
    /// one membership per group. Throws std::invalid_argument when
    /// duration <= 0, groups is empty or an identifier is malformed.
    virtual SessionRecord insert_session(Ipv4Address ip, std::string_view user,
                                         std::span<const std::string> groups, Seconds duration,
                                         TimePoint now) = 0;

    /// Removes sessions with end_time < now (and idle ones, if configured),
    /// then orphaned memberships. Returns the number of sessions removed.
    virtual std::size_t purge_expired(TimePoint now) = 0;

    /// Purge, then Ok(user) iff ip has a session whose user is in group.
    virtual AuthDecision lookup(Ipv4Address ip, std::string_view group, TimePoint now) = 0;

    virtual bool logout(Ipv4Address ip) = 0;

    /// The raw record for ip, expired or not.
    virtual std::optional<SessionRecord> find(Ipv4Address ip) = 0;

    virtual std::vector<SessionRecord> sessions() = 0;
    virtual std::vector<GroupMembership> memberships() = 0;
};

class InMemorySessionStore final : public SessionStore {
public:
    explicit InMemorySessionStore(StoreOptions options = {}) : options_(options) {}

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
    std::size_t purge_locked(TimePoint now);
    void drop_orphans_locked();

    StoreOptions options_;
    std::mutex mutex_;
    std::unordered_map<Ipv4Address, SessionRecord> sessions_;
    std::set<GroupMembership> memberships_;
};

/// Creates a store from a locator: "memory:" or "sqlite:<path>".
/// Throws std::invalid_argument for an unknown scheme.
std::unique_ptr<SessionStore> open_session_store(std::string_view locator, StoreOptions options = {});

} // namespace ipgate
