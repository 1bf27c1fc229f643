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

#include "ipgate/config.hpp"
#include "ipgate/uri.hpp"

#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fmt/format.h>

namespace ipgate {

namespace pt = boost::property_tree;

namespace {

const std::set<std::string>& known_keys(const std::string& section)
{
    static const std::map<std::string, std::set<std::string>> keys{
        {"proxy",
         {"listen_address", "listen_port", "login_url", "upstream_connect_timeout", "access_log", "proxy_protocol"}},
        {"policy", {"mode", "domains", "auth_group", "auth_cache_ttl"}},
        {"session", {"max_duration", "inactivity", "store"}},
        {"auth",
         {"listen_address", "listen_port", "backend", "credentials_file", "durations", "portal_dir",
          "proxy_protocol"}},
        {"ldap",
         {"host", "port", "user_dn_template", "group_base_dn", "group_member_attr", "member_is_dn", "group_name_attr",
          "default_group", "timeout"}},
    };
    static const std::set<std::string> none;
    auto it = keys.find(section);
    return it == keys.end() ? none : it->second;
}

class Reader {
public:
    explicit Reader(const pt::ptree& tree) : tree_(tree) {}

    std::optional<std::string> str(const std::string& section, const std::string& key) const
    {
        auto sec = tree_.get_child_optional(section);
        if (!sec)
            return std::nullopt;
        auto v = sec->get_optional<std::string>(pt::ptree::path_type(key, '\0'));
        if (!v)
            return std::nullopt;
        return *v;
    }

    template <typename Int>
    std::optional<Int> integer(const std::string& section, const std::string& key, long long lo, long long hi) const
    {
        auto s = str(section, key);
        if (!s)
            return std::nullopt;
        long long v = 0;
        std::size_t used = 0;
        try {
            v = std::stoll(*s, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used == 0 || used != s->size() || v < lo || v > hi)
            throw ConfigError(fmt::format("[{}] {}: expected an integer in {}..{}, got '{}'", section, key, lo, hi, *s));
        return static_cast<Int>(v);
    }

    std::optional<Seconds> seconds(const std::string& section, const std::string& key, long long lo) const
    {
        auto v = integer<long long>(section, key, lo, 10LL * 365 * 86400);
        if (!v)
            return std::nullopt;
        return Seconds{*v};
    }

    std::optional<bool> boolean(const std::string& section, const std::string& key) const
    {
        auto s = str(section, key);
        if (!s)
            return std::nullopt;
        if (*s == "true" || *s == "yes" || *s == "on" || *s == "1")
            return true;
        if (*s == "false" || *s == "no" || *s == "off" || *s == "0")
            return false;
        throw ConfigError(fmt::format("[{}] {}: expected true or false, got '{}'", section, key, *s));
    }

private:
    const pt::ptree& tree_;
};

std::vector<std::string> split_list(std::string_view s)
{
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == ',' || c == ' ' || c == '\t') {
            if (!cur.empty())
                out.push_back(std::move(cur));
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    if (!cur.empty())
        out.push_back(std::move(cur));
    return out;
}

} // namespace

Config parse_config(std::istream& in)
{
    pt::ptree tree;
    try {
        pt::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ConfigError(fmt::format("line {}: {}", e.line(), e.message()));
    }

    for (const auto& [name, section] : tree) {
        if (section.empty() && !section.data().empty())
            throw ConfigError(fmt::format("key '{}' must be inside a [section]", name));
        const auto& allowed = known_keys(name);
        if (allowed.empty())
            throw ConfigError(fmt::format("unknown section [{}]", name));
        for (const auto& [key, value] : section) {
            if (!allowed.contains(key))
                throw ConfigError(fmt::format("[{}] unknown key '{}'", name, key));
        }
    }

    Reader r(tree);
    Config c;
    if (auto v = r.str("proxy", "listen_address"))
        c.listen_address = *v;
    if (auto v = r.integer<std::uint16_t>("proxy", "listen_port", 1, 65535))
        c.listen_port = *v;
    if (auto v = r.str("proxy", "login_url"))
        c.login_url = *v;
    if (auto v = r.seconds("proxy", "upstream_connect_timeout", 1))
        c.upstream_connect_timeout = *v;
    if (auto v = r.str("proxy", "access_log"))
        c.access_log = *v;
    if (auto v = r.boolean("proxy", "proxy_protocol"))
        c.proxy_protocol = *v;

    if (auto v = r.str("policy", "mode")) {
        auto mode = parse_acl_mode(*v);
        if (!mode)
            throw ConfigError(fmt::format("[policy] mode: expected whitelist or blacklist, got '{}'", *v));
        c.policy.mode = *mode;
    }
    if (auto v = r.str("policy", "domains")) {
        for (auto& d : split_list(*v)) {
            try {
                c.policy.domain_list.push_back(normalize_domain_pattern(d));
            } catch (const std::invalid_argument& e) {
                throw ConfigError(fmt::format("[policy] domains: {}", e.what()));
            }
        }
    }
    if (auto v = r.str("policy", "auth_group"))
        c.policy.auth_group = *v;
    if (auto v = r.seconds("policy", "auth_cache_ttl", 0))
        c.policy.auth_cache_ttl = *v;

    if (auto v = r.seconds("session", "max_duration", 1))
        c.session_defaults.max_duration = *v;
    if (auto v = r.seconds("session", "inactivity", 1))
        c.session_defaults.inactivity = *v;
    if (auto v = r.str("session", "store"))
        c.store_locator = *v;

    if (auto v = r.str("auth", "listen_address"))
        c.auth.listen_address = *v;
    if (auto v = r.integer<std::uint16_t>("auth", "listen_port", 1, 65535))
        c.auth.listen_port = *v;
    if (auto v = r.str("auth", "backend")) {
        if (*v == "flatfile")
            c.auth.backend = CredentialBackendKind::FlatFile;
        else if (*v == "ldap")
            c.auth.backend = CredentialBackendKind::Ldap;
        else
            throw ConfigError(fmt::format("[auth] backend: expected flatfile or ldap, got '{}'", *v));
    }
    if (auto v = r.str("auth", "credentials_file"))
        c.auth.credentials_file = *v;
    if (auto v = r.str("auth", "durations")) {
        c.auth.duration_options.clear();
        for (const auto& item : split_list(*v)) {
            long long secs = 0;
            std::size_t used = 0;
            try {
                secs = std::stoll(item, &used);
            } catch (const std::exception&) {
                used = 0;
            }
            if (used != item.size() || secs <= 0)
                throw ConfigError(fmt::format("[auth] durations: '{}' is not a positive number of seconds", item));
            c.auth.duration_options.emplace_back(secs);
        }
    }
    if (auto v = r.str("auth", "portal_dir"))
        c.auth.portal_dir = *v;
    if (auto v = r.boolean("auth", "proxy_protocol"))
        c.auth.proxy_protocol = *v;

    LdapConfig& l = c.auth.ldap;
    if (auto v = r.str("ldap", "host"))
        l.host = *v;
    if (auto v = r.integer<std::uint16_t>("ldap", "port", 1, 65535))
        l.port = *v;
    if (auto v = r.str("ldap", "user_dn_template"))
        l.user_dn_template = *v;
    if (auto v = r.str("ldap", "group_base_dn"))
        l.group_base_dn = *v;
    if (auto v = r.str("ldap", "group_member_attr"))
        l.group_member_attr = *v;
    if (auto v = r.boolean("ldap", "member_is_dn"))
        l.member_is_dn = *v;
    if (auto v = r.str("ldap", "group_name_attr"))
        l.group_name_attr = *v;
    if (auto v = r.str("ldap", "default_group"))
        l.default_group = *v;
    if (auto v = r.seconds("ldap", "timeout", 1))
        l.timeout = *v;

    validate(c);
    return c;
}

Config load_config(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError(fmt::format("cannot read config file {}", path.string()));
    Config c;
    try {
        c = parse_config(in);
    } catch (const ConfigError& e) {
        throw ConfigError(fmt::format("{}: {}", path.string(), e.what()));
    }
    // Relative paths are relative to the file that names them.
    auto anchor = [&](std::filesystem::path& p) {
        if (!p.empty() && p.is_relative())
            p = path.parent_path() / p;
    };
    anchor(c.auth.credentials_file);
    anchor(c.auth.portal_dir);
    if (c.store_locator.starts_with("sqlite:")) {
        std::filesystem::path db = c.store_locator.substr(7);
        anchor(db);
        c.store_locator = "sqlite:" + db.string();
    }
    if (c.access_log != "-") {
        std::filesystem::path log = c.access_log;
        anchor(log);
        c.access_log = log.string();
    }
    return c;
}

void validate(const Config& c)
{
    if (!Ipv4Address::parse(c.listen_address))
        throw ConfigError(fmt::format("[proxy] listen_address: '{}' is not an IPv4 address", c.listen_address));
    if (!Ipv4Address::parse(c.auth.listen_address))
        throw ConfigError(fmt::format("[auth] listen_address: '{}' is not an IPv4 address", c.auth.listen_address));
    if (c.login_url.empty())
        throw ConfigError("[proxy] login_url is required");
    if (!parse_absolute_uri(c.login_url))
        throw ConfigError(fmt::format("[proxy] login_url: '{}' is not an absolute http URL", c.login_url));
    try {
        c.policy.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(fmt::format("[policy] {}", e.what()));
    }
    if (c.auth.duration_options.empty())
        throw ConfigError("[auth] durations must list at least one duration");
    if (!c.store_locator.starts_with("memory") && !c.store_locator.starts_with("sqlite:"))
        throw ConfigError(fmt::format("[session] store: unknown locator '{}'", c.store_locator));
    if (c.auth.backend == CredentialBackendKind::FlatFile && c.auth.credentials_file.empty())
        throw ConfigError("[auth] credentials_file is required for the flatfile backend");
    if (c.auth.backend == CredentialBackendKind::Ldap) {
        if (c.auth.ldap.user_dn_template.find("{user}") == std::string::npos)
            throw ConfigError("[ldap] user_dn_template must contain {user}");
        if (c.auth.ldap.group_base_dn.empty() && !is_valid_identifier(c.auth.ldap.default_group))
            throw ConfigError("[ldap] default_group is required when group_base_dn is empty");
    }
}

} // namespace ipgate
