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

#include "ipgate/clock.hpp"
#include "ipgate/ipv4.hpp"
#include "ipgate/session_store.hpp"

#include <filesystem>
#include <random>
#include <string>
#include <vector>

namespace ipgate::test {

inline const TimePoint t0{Seconds{1'700'000'000}};

inline Ipv4Address ip(std::string_view text) { return Ipv4Address::from_string(text); }

inline std::vector<std::string> groups(std::initializer_list<const char*> names)
{
    return {names.begin(), names.end()};
}

/// Store that fails every call, as if its database had gone away.
class DeadStore final : public SessionStore {
public:
    SessionRecord insert_session(Ipv4Address, std::string_view, std::span<const std::string>, Seconds,
                                 TimePoint) override
    {
        throw StoreUnavailable("dead");
    }
    std::size_t purge_expired(TimePoint) override { throw StoreUnavailable("dead"); }
    AuthDecision lookup(Ipv4Address, std::string_view, TimePoint) override { throw StoreUnavailable("dead"); }
    bool logout(Ipv4Address) override { throw StoreUnavailable("dead"); }
    std::optional<SessionRecord> find(Ipv4Address) override { throw StoreUnavailable("dead"); }
    std::vector<SessionRecord> sessions() override { throw StoreUnavailable("dead"); }
    std::vector<GroupMembership> memberships() override { throw StoreUnavailable("dead"); }
};

/// Wraps a store and counts lookups.
class CountingStore final : public SessionStore {
public:
    explicit CountingStore(SessionStore& inner) : inner_(inner) {}

    SessionRecord insert_session(Ipv4Address ip, std::string_view user, std::span<const std::string> g, Seconds d,
                                 TimePoint now) override
    {
        return inner_.insert_session(ip, user, g, d, now);
    }
    std::size_t purge_expired(TimePoint now) override { return inner_.purge_expired(now); }
    AuthDecision lookup(Ipv4Address ip, std::string_view group, TimePoint now) override
    {
        ++lookups;
        return inner_.lookup(ip, group, now);
    }
    bool logout(Ipv4Address ip) override { return inner_.logout(ip); }
    std::optional<SessionRecord> find(Ipv4Address ip) override { return inner_.find(ip); }
    std::vector<SessionRecord> sessions() override { return inner_.sessions(); }
    std::vector<GroupMembership> memberships() override { return inner_.memberships(); }

    int lookups = 0;

private:
    SessionStore& inner_;
};

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    TempDir()
    {
        std::random_device rd;
        path_ = std::filesystem::temp_directory_path() / ("ipgate-test-" + std::to_string(rd()));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() { std::filesystem::remove_all(path_); }
    const std::filesystem::path& path() const noexcept { return path_; }

private:
    std::filesystem::path path_;
};

} // namespace ipgate::test
