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


#include "ipgate/credentials.hpp"

#include "support.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <chrono>
#include <fstream>
#include <sstream>

using namespace ipgate;
using namespace ipgate::test;

TEST(PasswordHash, FormatAndVerification)
{
    std::string h = hash_password("s3cret", 1000);
    EXPECT_TRUE(h.starts_with("pbkdf2-sha256$1000$"));
    // scheme, iterations, 16-byte salt and 32-byte digest in hex
    EXPECT_EQ(std::count(h.begin(), h.end(), '$'), 3);
    EXPECT_EQ(h.size(), std::string("pbkdf2-sha256$1000$").size() + 32 + 1 + 64);
    EXPECT_TRUE(verify_password("s3cret", h));
    EXPECT_FALSE(verify_password("s3cret!", h));
    EXPECT_FALSE(verify_password("", h));
}

TEST(PasswordHash, SaltsDiffer) { EXPECT_NE(hash_password("same", 1000), hash_password("same", 1000)); }

TEST(PasswordHash, MalformedHashesNeverMatch)
{
    for (const char* bad : {"", "plaintext", "pbkdf2-sha256$0$00$00", "pbkdf2-sha256$x$00$00",
                            "md5$1000$00112233445566778899aabbccddeeff$00", "pbkdf2-sha256$1000$zz$zz"})
        EXPECT_FALSE(verify_password("anything", bad)) << bad;
}

// Independent check of the derivation against a published PBKDF2-HMAC-SHA256
// vector (RFC 7914 section 11: P="passwd", S="salt", c=1).
TEST(PasswordHash, KnownVector)
{
    std::string stored = "pbkdf2-sha256$1$73616c74$55ac046e56e3089fec1691c22544b605f94185216dde0465e68b9d57c20dacbc";
    EXPECT_TRUE(verify_password("passwd", stored));
    EXPECT_FALSE(verify_password("passwe", stored));
}

TEST(CredentialsFile, Grammar)
{
    std::string a = hash_password("pa", 1000), b = hash_password("pb", 1000);
    std::istringstream in("# staff accounts\n\nalice:" + a + ":internet\r\n  # indented comment\nbob:" + b +
                          ":internet,staff\n");
    auto records = parse_credentials(in);
    ASSERT_EQ(records.size(), 2u);
    EXPECT_EQ(records[0].user, "alice");
    EXPECT_EQ(records[0].groups, groups({"internet"}));
    EXPECT_EQ(records[1].groups, groups({"internet", "staff"}));
}

TEST(CredentialsFile, ErrorsCarryLineNumbers)
{
    std::string h = hash_password("p", 1000);
    auto error_for = [](const std::string& text) {
        std::istringstream in(text);
        try {
            parse_credentials(in);
        } catch (const CredentialsError& e) {
            return std::string(e.what());
        }
        return std::string("no error");
    };
    EXPECT_NE(error_for("alice:" + h + ":internet\nalice:" + h + ":staff\n").find("line 2: duplicate"),
              std::string::npos);
    EXPECT_NE(error_for("# c\nalice:plaintext:internet\n").find("line 2"), std::string::npos);
    EXPECT_NE(error_for("alice:" + h + ":\n").find("line 1"), std::string::npos);
    EXPECT_NE(error_for("alice:" + h + "\n").find("line 1"), std::string::npos);
    EXPECT_NE(error_for("al ice:" + h + ":internet\n").find("line 1"), std::string::npos);
    EXPECT_NE(error_for("alice:" + h + ":a,,b\n").find("line 1"), std::string::npos);
}

namespace {

FlatFileBackend fixture(unsigned iterations = 1000)
{
    return FlatFileBackend({{"alice", hash_password("wonderland", iterations), {"internet"}},
                            {"bob", hash_password("builder", iterations), {"internet", "staff"}}});
}

} // namespace

TEST(FlatFileBackend, Verify)
{
    FlatFileBackend backend = fixture();
    VerifyResult ok = backend.verify("alice", "wonderland");
    EXPECT_TRUE(ok.success);
    EXPECT_EQ(ok.groups, groups({"internet"}));

    VerifyResult wrong = backend.verify("alice", "looking-glass");
    EXPECT_FALSE(wrong.success);
    EXPECT_TRUE(wrong.groups.empty());

    VerifyResult unknown = backend.verify("mallory", "wonderland");
    EXPECT_FALSE(unknown.success);
    EXPECT_TRUE(unknown.groups.empty());

    EXPECT_EQ(backend.verify("bob", "builder").groups, groups({"internet", "staff"}));
}

TEST(FlatFileBackend, UnknownUserCostsAboutAsMuchAsWrongPassword)
{
    FlatFileBackend backend = fixture(20000);
    auto median_ms = [&](std::string_view user) {
        std::vector<double> t;
        for (int i = 0; i < 7; ++i) {
            auto start = std::chrono::steady_clock::now();
            backend.verify(user, "not-the-password");
            t.push_back(std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count());
        }
        std::sort(t.begin(), t.end());
        return t[3];
    };
    double wrong = median_ms("alice");
    double unknown = median_ms("mallory");
    EXPECT_GT(unknown, wrong * 0.5);
    EXPECT_LT(unknown, wrong * 2.0);
}

TEST(FlatFileBackend, LoadErrors)
{
    EXPECT_THROW(FlatFileBackend::load("/nonexistent/credentials"), CredentialsError);
    TempDir dir;
    auto path = dir.path() / "creds";
    std::ofstream(path) << "alice:" << hash_password("x", 1000) << ":internet\n";
    EXPECT_TRUE(FlatFileBackend::load(path).verify("alice", "x").success);
    std::ofstream(path) << "alice:bad:internet\n";
    try {
        FlatFileBackend::load(path);
        FAIL();
    } catch (const CredentialsError& e) {
        EXPECT_NE(std::string(e.what()).find(path.string()), std::string::npos);
    }
}
