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

#include <gtest/gtest.h>

#include <sstream>

using namespace ipgate;

namespace {

Config parse(const std::string& text)
{
    std::istringstream in(text);
    return parse_config(in);
}

// Proxy section only, open for more proxy keys.
const std::string kBare = "[proxy]\nlogin_url = http://10.0.0.1:8081/login\n";
const std::string kMinimal = "[proxy]\nlogin_url = http://10.0.0.1:8081/login\n[auth]\ncredentials_file = users.txt\n";

std::string error_of(const std::string& text)
{
    try {
        parse(text);
    } catch (const ConfigError& e) {
        return e.what();
    }
    return "";
}

} // namespace

TEST(Config, MinimalFileUsesDefaults)
{
    Config c = parse(kMinimal);
    EXPECT_EQ(c.listen_port, 3128);
    EXPECT_EQ(c.policy.mode, AclMode::Whitelist);
    EXPECT_EQ(c.policy.auth_group, "internet");
    EXPECT_EQ(c.policy.auth_cache_ttl, Seconds{300});
    EXPECT_EQ(c.session_defaults.max_duration, Seconds{86400});
    EXPECT_FALSE(c.session_defaults.inactivity);
    EXPECT_EQ(c.store_locator, "memory:");
    EXPECT_EQ(c.auth.duration_options, (std::vector<Seconds>{Seconds{3600}, Seconds{14400}, Seconds{28800}}));
}

TEST(Config, SampleFileParses)
{
    Config c = load_config(IPGATE_SOURCE_DIR "/conf/ipgate.conf");
    EXPECT_EQ(c.policy.domain_list, (std::vector<std::string>{"example.org", ".intranet.example"}));
    EXPECT_EQ(c.auth.backend, CredentialBackendKind::FlatFile);
    EXPECT_EQ(c.auth.ldap.user_dn_template, "uid={user},ou=people,dc=example,dc=org");
    EXPECT_EQ(c.auth.ldap.group_member_attr, "memberUid");
}

TEST(Config, AllKeys)
{
    Config c = parse(R"([proxy]
listen_address = 127.0.0.1
listen_port = 8080
login_url = http://portal.example/login
upstream_connect_timeout = 3
access_log = /var/log/ipgate/access.log
proxy_protocol = yes
[policy]
mode = blacklist
domains = Social.Example .VIDEO.example
auth_group = staff
auth_cache_ttl = 0
[session]
max_duration = 7200
inactivity = 600
store = sqlite:/tmp/s.db
[auth]
backend = ldap
durations = 60,120
listen_port = 9000
[ldap]
host = ldap.example
port = 636
user_dn_template = uid={user},dc=example
group_base_dn =
member_is_dn = true
default_group = staff
timeout = 2
)");
    EXPECT_EQ(c.listen_address, "127.0.0.1");
    EXPECT_EQ(c.listen_port, 8080);
    EXPECT_EQ(c.upstream_connect_timeout, Seconds{3});
    EXPECT_TRUE(c.proxy_protocol);
    EXPECT_EQ(c.policy.mode, AclMode::Blacklist);
    EXPECT_EQ(c.policy.domain_list, (std::vector<std::string>{"social.example", ".video.example"}));
    EXPECT_EQ(c.policy.auth_cache_ttl, Seconds{0});
    EXPECT_EQ(c.session_defaults.inactivity, Seconds{600});
    EXPECT_EQ(c.store_locator, "sqlite:/tmp/s.db");
    EXPECT_EQ(c.auth.backend, CredentialBackendKind::Ldap);
    EXPECT_EQ(c.auth.duration_options, (std::vector<Seconds>{Seconds{60}, Seconds{120}}));
    EXPECT_EQ(c.auth.ldap.port, 636);
    EXPECT_TRUE(c.auth.ldap.member_is_dn);
    EXPECT_TRUE(c.auth.ldap.group_base_dn.empty());
}

TEST(Config, Errors)
{
    EXPECT_NE(error_of("[proxy]\nlisten_port = 3128\n").find("login_url is required"), std::string::npos);
    EXPECT_NE(error_of(kMinimal + "[policy]\nmode = greylist\n").find("whitelist or blacklist"), std::string::npos);
    EXPECT_NE(error_of(kMinimal + "[policy]\nauth_cache_ttl = -1\n").find("auth_cache_ttl"), std::string::npos);
    EXPECT_THROW(parse(kMinimal + "[proxy]\nlisten_port = 1\n"), ConfigError); // duplicate section
    EXPECT_NE(error_of(kMinimal + "[bogus]\nx = 1\n").find("unknown section [bogus]"), std::string::npos);
    EXPECT_NE(error_of(kMinimal + "[session]\ncolour = red\n").find("unknown key 'colour'"), std::string::npos);
    EXPECT_NE(error_of("[proxy]\nlisten_port = 99999\nlogin_url = http://x/\n").find("listen_port"), std::string::npos);
    EXPECT_NE(error_of("[proxy]\nlogin_url = ftp://x/\n").find("absolute http URL"), std::string::npos);
    EXPECT_NE(error_of(kMinimal + "[session]\nstore = redis://x\n").find("unknown locator"), std::string::npos);
    EXPECT_NE(error_of(kBare + "[auth]\ncredentials_file = u\ndurations = 60, soon\n").find("durations"),
              std::string::npos);
    EXPECT_NE(error_of(kBare + "proxy_protocol = maybe\n").find("true or false"), std::string::npos);
    EXPECT_NE(error_of(kMinimal + "[policy]\ndomains = bad..domain\n").find("domains"), std::string::npos);
    EXPECT_NE(error_of(kBare + "[auth]\nbackend = ldap\n[ldap]\nuser_dn_template = cn=fixed\n").find("{user}"),
              std::string::npos);
    EXPECT_NE(error_of("[proxy]\nlogin_url = http://x/\n").find("credentials_file"), std::string::npos);
    EXPECT_NE(error_of("[proxy\nx=1\n").find("line 1"), std::string::npos);
}

TEST(Config, BadFileIsRejected)
{
    EXPECT_THROW(load_config(IPGATE_SOURCE_DIR "/tests/data/bad.conf"), ConfigError);
    EXPECT_THROW(load_config("/nonexistent/ipgate.conf"), ConfigError);
}
