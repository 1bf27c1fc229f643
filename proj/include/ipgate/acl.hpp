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

// Access policy evaluation.
//
// Whitelist mode (proxy on the gateway, default deny):
//   1. host on the domain list          -> Allow
//   2. client address authenticated     -> Allow (user)
//   3. otherwise                        -> DenyNeedsLogin
//
// Blacklist mode (default allow, login lifts the block):
//   1. client address authenticated     -> Allow (user)
//   2. host on the domain list          -> DenyBlacklisted
//   3. otherwise                        -> Allow
//
// Authentication answers come from the session store through a per-address
// cache whose entries live for auth_cache_ttl seconds. Both Ok and Err
// answers are cached, so a logout may keep granting access until the entry
// ages out.

#pragma once

#include "ipgate/clock.hpp"
#include "ipgate/ipv4.hpp"
#include "ipgate/session_store.hpp"

#include <atomic>
#include <cstdint>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace ipgate {

/// The unit the policy judges: one HTTP request as seen by the proxy.
struct HttpRequestSummary {
    Ipv4Address client_ip;
    std::string method;
    std::string request_target;
    std::string host; ///< lowercase, no port
    std::uint16_t port = 80;
    std::string absolute_uri;
};

enum class AclMode { Whitelist, Blacklist };

std::string_view to_string(AclMode mode) noexcept;
std::optional<AclMode> parse_acl_mode(std::string_view text) noexcept;

struct AclPolicy {
    AclMode mode = AclMode::Whitelist;
    std::vector<std::string> domain_list;
    std::string auth_group = "internet";
    /// Zero disables caching entirely.
    Seconds auth_cache_ttl{300};

    /// Throws std::invalid_argument on malformed patterns, a bad group or a
    /// negative ttl.
    void validate() const;
};

/// Lowercases a domain pattern and checks its shape: optional leading '.',
/// then dot-separated labels of [a-z0-9-]. Throws std::invalid_argument.
std::string normalize_domain_pattern(std::string_view pattern);

/// host == pattern, or pattern is ".d" and host is d or ends with ".d".
bool match_domain(std::string_view host, std::span<const std::string> patterns) noexcept;

enum class VerdictAction { Allow, DenyNeedsLogin, DenyBlacklisted };

std::string_view to_string(VerdictAction action) noexcept;

struct Verdict {
    VerdictAction action = VerdictAction::DenyNeedsLogin;
    std::optional<std::string> authenticated_user;

    bool allowed() const noexcept { return action == VerdictAction::Allow; }
    bool operator==(const Verdict&) const = default;
};

/// The rule table alone. `auth` is only consulted when the mode's rule order
/// reaches the authentication step, which is why it is passed lazily.
template <typename AuthFn>
Verdict apply_rules(AclMode mode, bool host_listed, AuthFn&& auth)
{
    if (mode == AclMode::Whitelist) {
        if (host_listed)
            return {VerdictAction::Allow, std::nullopt};
        AuthDecision d = auth();
        if (d.is_ok())
            return {VerdictAction::Allow, d.user()};
        return {VerdictAction::DenyNeedsLogin, std::nullopt};
    }
    AuthDecision d = auth();
    if (d.is_ok())
        return {VerdictAction::Allow, d.user()};
    if (host_listed)
        return {VerdictAction::DenyBlacklisted, std::nullopt};
    return {VerdictAction::Allow, std::nullopt};
}

struct CacheEntry {
    Ipv4Address ip;
    AuthDecision decision;
    TimePoint cached_at;
};

/// Per-address cache of session store answers.
class AuthCache {
public:
    explicit AuthCache(Seconds ttl) : ttl_(ttl) {}

    /// Fresh while now - cached_at <= ttl. A ttl of zero never serves.
    std::optional<AuthDecision> get(Ipv4Address ip, TimePoint now) const;
    void put(Ipv4Address ip, AuthDecision decision, TimePoint now);
    void erase(Ipv4Address ip);
    void clear();
    Seconds ttl() const noexcept { return ttl_; }

private:
    Seconds ttl_;
    mutable std::mutex mutex_;
    std::unordered_map<Ipv4Address, CacheEntry> entries_;
};

struct AclStats {
    std::uint64_t cache_hits = 0;
    std::uint64_t store_lookups = 0;
    std::uint64_t store_failures = 0;
};

class AclEngine {
public:
    /// Throws std::invalid_argument when the policy does not validate.
    AclEngine(AclPolicy policy, SessionStore& store);

    const AclPolicy& policy() const noexcept { return policy_; }

    /// Cached answer if fresh, otherwise a store lookup whose result is
    /// cached. A store failure yields Err and is not cached.
    AuthDecision cached_auth_check(Ipv4Address ip, TimePoint now);

    Verdict evaluate(const HttpRequestSummary& request, TimePoint now);

    /// Drops the cached answer for one address, e.g. right after a login.
    void forget(Ipv4Address ip) { cache_.erase(ip); }
    void clear_cache() { cache_.clear(); }
    AclStats stats() const noexcept;

private:
    AclPolicy policy_;
    SessionStore& store_;
    AuthCache cache_;
    std::atomic<std::uint64_t> cache_hits_{0};
    std::atomic<std::uint64_t> store_lookups_{0};
    std::atomic<std::uint64_t> store_failures_{0};
};

} // namespace ipgate
