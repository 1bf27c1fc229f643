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

#include <algorithm>

#include <fmt/format.h>

namespace ipgate {

bool is_valid_identifier(std::string_view id) noexcept
{
    if (id.empty())
        return false;
    return std::none_of(id.begin(), id.end(), [](char c) {
        auto u = static_cast<unsigned char>(c);
        return u <= 0x20 || u == 0x7f;
    });
}

namespace detail {

void check_insert_args(std::string_view user, std::span<const std::string> groups, Seconds duration)
{
    if (duration <= Seconds::zero())
        throw std::invalid_argument("session duration must be positive");
    if (!is_valid_identifier(user))
        throw std::invalid_argument(fmt::format("invalid user identifier '{}'", user));
    if (groups.empty())
        throw std::invalid_argument("a session needs at least one group");
    for (const auto& g : groups) {
        if (!is_valid_identifier(g))
            throw std::invalid_argument(fmt::format("invalid group identifier '{}'", g));
    }
}

} // namespace detail

SessionRecord InMemorySessionStore::insert_session(Ipv4Address ip, std::string_view user,
                                                   std::span<const std::string> groups,
                                                   Seconds duration, TimePoint now)
{
    detail::check_insert_args(user, groups, duration);
    SessionRecord rec{ip, std::string(user), now + duration, now};

    std::lock_guard lock(mutex_);
    sessions_.insert_or_assign(ip, rec);
    for (const auto& g : groups)
        memberships_.insert(GroupMembership{rec.user, g});
    // Replacing another user's record can orphan that user's memberships.
    drop_orphans_locked();
    return rec;
}

std::size_t InMemorySessionStore::purge_expired(TimePoint now)
{
    std::lock_guard lock(mutex_);
    return purge_locked(now);
}

std::size_t InMemorySessionStore::purge_locked(TimePoint now)
{
    std::size_t removed = std::erase_if(sessions_, [&](const auto& kv) {
        const SessionRecord& r = kv.second;
        if (r.end_time < now)
            return true;
        return options_.inactivity && r.last_activity + *options_.inactivity < now;
    });
    drop_orphans_locked();
    return removed;
}

void InMemorySessionStore::drop_orphans_locked()
{
    std::set<std::string_view> owners;
    for (const auto& [ip, rec] : sessions_)
        owners.insert(rec.user);
    std::erase_if(memberships_, [&](const GroupMembership& m) { return !owners.contains(m.user); });
}

AuthDecision InMemorySessionStore::lookup(Ipv4Address ip, std::string_view group, TimePoint now)
{
    std::lock_guard lock(mutex_);
    purge_locked(now);
    auto it = sessions_.find(ip);
    if (it == sessions_.end())
        return AuthDecision::err();
    if (!memberships_.contains(GroupMembership{it->second.user, std::string(group)}))
        return AuthDecision::err();
    if (options_.inactivity)
        it->second.last_activity = now;
    return AuthDecision::ok(it->second.user);
}

bool InMemorySessionStore::logout(Ipv4Address ip)
{
    std::lock_guard lock(mutex_);
    bool removed = sessions_.erase(ip) > 0;
    drop_orphans_locked();
    return removed;
}

std::optional<SessionRecord> InMemorySessionStore::find(Ipv4Address ip)
{
    std::lock_guard lock(mutex_);
    auto it = sessions_.find(ip);
    if (it == sessions_.end())
        return std::nullopt;
    return it->second;
}

std::vector<SessionRecord> InMemorySessionStore::sessions()
{
    std::lock_guard lock(mutex_);
    std::vector<SessionRecord> out;
    out.reserve(sessions_.size());
    for (const auto& [ip, rec] : sessions_)
        out.push_back(rec);
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.ip < b.ip; });
    return out;
}

std::vector<GroupMembership> InMemorySessionStore::memberships()
{
    std::lock_guard lock(mutex_);
    return {memberships_.begin(), memberships_.end()};
}

std::unique_ptr<SessionStore> open_session_store(std::string_view locator, StoreOptions options)
{
    if (locator == "memory:" || locator == "memory")
        return std::make_unique<InMemorySessionStore>(options);
    constexpr std::string_view sqlite_scheme = "sqlite:";
    if (locator.starts_with(sqlite_scheme) && locator.size() > sqlite_scheme.size())
        return std::make_unique<SqliteSessionStore>(std::string(locator.substr(sqlite_scheme.size())),
                                                    options);
    throw std::invalid_argument(
        fmt::format("unknown store locator '{}' (expected memory: or sqlite:<path>)", locator));
}

} // namespace ipgate
