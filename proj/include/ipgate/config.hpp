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

// Main configuration file. INI-style: "key = value" lines grouped under
// [proxy], [policy], [session], [auth] and [ldap]; '#' and ';' start
// comments. The full grammar is in docs/config.md.

#pragma once

#include "ipgate/acl.hpp"
#include "ipgate/clock.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace ipgate {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct SessionDefaults {
    Seconds max_duration{86400};
    std::optional<Seconds> inactivity;
};

struct LdapConfig {
    std::string host = "127.0.0.1";
    std::uint16_t port = 389;
    /// "uid={user},ou=people,dc=example,dc=org"
    std::string user_dn_template;
    /// Empty disables the group search; every user then gets default_group.
    std::string group_base_dn;
    /// Attribute of a group entry that lists members.
    std::string group_member_attr = "memberUid";
    /// Whether the member attribute holds the bare user name or the full DN.
    bool member_is_dn = false;
    /// Attribute of a group entry that names it.
    std::string group_name_attr = "cn";
    std::string default_group = "internet";
    Seconds timeout{5};
};

enum class CredentialBackendKind { FlatFile, Ldap };

struct AuthConfig {
    std::string listen_address = "0.0.0.0";
    std::uint16_t listen_port = 8081;
    CredentialBackendKind backend = CredentialBackendKind::FlatFile;
    std::filesystem::path credentials_file;
    std::vector<Seconds> duration_options{Seconds{3600}, Seconds{4 * 3600}, Seconds{8 * 3600}};
    std::filesystem::path portal_dir;
    bool proxy_protocol = false;
    LdapConfig ldap;
};

struct Config {
    std::string listen_address = "0.0.0.0";
    std::uint16_t listen_port = 3128;
    AclPolicy policy;
    std::string login_url;
    Seconds upstream_connect_timeout{10};
    SessionDefaults session_defaults;
    std::string store_locator = "memory:";
    /// Path, or "-" for stdout.
    std::string access_log = "-";
    /// Connections open with a PROXY v1 line carrying the client address.
    bool proxy_protocol = false;
    AuthConfig auth;
};

/// Throws ConfigError naming the offending key.
Config parse_config(std::istream& in);
/// Like parse_config; relative paths in the file are resolved against the
/// file's directory.
Config load_config(const std::filesystem::path& path);

/// Checks cross-field invariants. Throws ConfigError.
void validate(const Config& config);

} // namespace ipgate
