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

#include "ipgate/acl.hpp"
#include "ipgate/http.hpp"

#include <algorithm>
#include <cctype>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

namespace ipgate {

std::string_view to_string(AclMode mode) noexcept
{
    return mode == AclMode::Whitelist ? "whitelist" : "blacklist";
}

std::optional<AclMode> parse_acl_mode(std::string_view text) noexcept
{
    if (iequals(text, "whitelist"))
        return AclMode::Whitelist;
    if (iequals(text, "blacklist"))
        return AclMode::Blacklist;
    return std::nullopt;
}

std::string_view to_string(VerdictAction action) noexcept
{
    switch (action) {
    case VerdictAction::Allow:
        return "Allow";
    case VerdictAction::DenyNeedsLogin:
        return "DenyNeedsLogin";
    case VerdictAction::DenyBlacklisted:
        return "DenyBlacklisted";
    }
    return "?";
}

std::string normalize_domain_pattern(std::string_view pattern)
{
    std::string p;
    p.reserve(pattern.size());
    for (char c : pattern)
        p.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));

    std::string_view body = p;
    if (body.starts_with('.'))
        body.remove_prefix(1);
    bool label_start = true;
    bool ok = !body.empty();
    for (char c : body) {
        if (c == '.') {
            ok = ok && !label_start;
            label_start = true;
            continue;
        }
        bool valid = (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '-';
        ok = ok && valid;
        label_start = false;
    }
    if (!ok || label_start)
        throw std::invalid_argument(fmt::format("invalid domain pattern '{}'", pattern));
    return p;
}

bool match_domain(std::string_view host, std::span<const std::string> patterns) noexcept
{
    return std::any_of(patterns.begin(), patterns.end(), [&](const std::string& pat) {
        if (!pat.starts_with('.'))
            return host == pat;
        std::string_view base = std::string_view(pat).substr(1);
        if (host == base)
            return true;
        // pat includes the leading dot, so the suffix check enforces a label boundary
        return host.size() > pat.size() && host.ends_with(pat);
    });
}

void AclPolicy::validate() const
{
    if (auth_cache_ttl < Seconds::zero())
        throw std::invalid_argument("auth_cache_ttl must not be negative");
    if (!is_valid_identifier(auth_group))
        throw std::invalid_argument(fmt::format("invalid auth group '{}'", auth_group));
    for (const auto& d : domain_list) {
        if (normalize_domain_pattern(d) != d)
            throw std::invalid_argument(fmt::format("domain pattern '{}' is not lowercase", d));
    }
}

std::optional<AuthDecision> AuthCache::get(Ipv4Address ip, TimePoint now) const
{
    if (ttl_ == Seconds::zero())
        return std::nullopt;
    std::lock_guard lock(mutex_);
    auto it = entries_.find(ip);
    if (it == entries_.end() || now - it->second.cached_at > ttl_)
        return std::nullopt;
    return it->second.decision;
}

void AuthCache::put(Ipv4Address ip, AuthDecision decision, TimePoint now)
{
    if (ttl_ == Seconds::zero())
        return;
    std::lock_guard lock(mutex_);
    // Racing refreshes carry equivalent answers; last writer wins.
    entries_.insert_or_assign(ip, CacheEntry{ip, std::move(decision), now});
    if (entries_.size() > 4096)
        std::erase_if(entries_, [&](const auto& kv) { return now - kv.second.cached_at > ttl_; });
}

void AuthCache::erase(Ipv4Address ip)
{
    std::lock_guard lock(mutex_);
    entries_.erase(ip);
}

void AuthCache::clear()
{
    std::lock_guard lock(mutex_);
    entries_.clear();
}

AclEngine::AclEngine(AclPolicy policy, SessionStore& store)
    : policy_(std::move(policy)), store_(store), cache_(policy_.auth_cache_ttl)
{
    policy_.validate();
}

AuthDecision AclEngine::cached_auth_check(Ipv4Address ip, TimePoint now)
{
    if (auto hit = cache_.get(ip, now)) {
        ++cache_hits_;
        return *hit;
    }
    ++store_lookups_;
    try {
        AuthDecision d = store_.lookup(ip, policy_.auth_group, now);
        cache_.put(ip, d, now);
        return d;
    } catch (const std::exception& e) {
        ++store_failures_;
        spdlog::warn("session store lookup for {} failed, denying: {}", ip.to_string(), e.what());
        return AuthDecision::err();
    }
}

Verdict AclEngine::evaluate(const HttpRequestSummary& request, TimePoint now)
{
    bool listed = match_domain(request.host, policy_.domain_list);
    return apply_rules(policy_.mode, listed, [&] { return cached_auth_check(request.client_ip, now); });
}

AclStats AclEngine::stats() const noexcept
{
    return AclStats{cache_hits_.load(), store_lookups_.load(), store_failures_.load()};
}

} // namespace ipgate
