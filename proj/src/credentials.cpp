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
#include "ipgate/session_store.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <optional>
#include <set>
#include <span>

#include <openssl/crypto.h>
#include <openssl/evp.h>
#include <openssl/rand.h>

#include <fmt/format.h>

namespace ipgate {

namespace {

constexpr std::string_view kScheme = "pbkdf2-sha256";
constexpr std::size_t kHashBytes = 32;

std::string to_hex(const unsigned char* p, std::size_t n)
{
    static constexpr char kDigits[] = "0123456789abcdef";
    std::string out;
    out.reserve(n * 2);
    for (std::size_t i = 0; i < n; ++i) {
        out.push_back(kDigits[p[i] >> 4]);
        out.push_back(kDigits[p[i] & 0xf]);
    }
    return out;
}

std::optional<std::vector<unsigned char>> from_hex(std::string_view s)
{
    if (s.size() % 2 != 0)
        return std::nullopt;
    std::vector<unsigned char> out(s.size() / 2);
    for (std::size_t i = 0; i < out.size(); ++i) {
        unsigned v = 0;
        auto [ptr, ec] = std::from_chars(s.data() + 2 * i, s.data() + 2 * i + 2, v, 16);
        if (ec != std::errc{} || ptr != s.data() + 2 * i + 2)
            return std::nullopt;
        out[i] = static_cast<unsigned char>(v);
    }
    return out;
}

std::vector<unsigned char> derive(std::string_view password, std::span<const unsigned char> salt, unsigned iterations)
{
    std::vector<unsigned char> out(kHashBytes);
    if (PKCS5_PBKDF2_HMAC(password.data(), static_cast<int>(password.size()), salt.data(),
                          static_cast<int>(salt.size()), static_cast<int>(iterations), EVP_sha256(),
                          static_cast<int>(out.size()), out.data()) != 1)
        throw std::runtime_error("PBKDF2 failed");
    return out;
}

struct ParsedHash {
    unsigned iterations = 0;
    std::vector<unsigned char> salt;
    std::vector<unsigned char> hash;
};

std::optional<ParsedHash> parse_hash(std::string_view stored)
{
    std::vector<std::string_view> parts;
    while (true) {
        std::size_t d = stored.find('$');
        parts.push_back(stored.substr(0, d));
        if (d == std::string_view::npos)
            break;
        stored.remove_prefix(d + 1);
    }
    if (parts.size() != 4 || parts[0] != kScheme)
        return std::nullopt;
    ParsedHash h;
    auto [ptr, ec] = std::from_chars(parts[1].data(), parts[1].data() + parts[1].size(), h.iterations);
    if (ec != std::errc{} || ptr != parts[1].data() + parts[1].size() || h.iterations == 0 ||
        h.iterations > 10'000'000)
        return std::nullopt;
    auto salt = from_hex(parts[2]);
    auto hash = from_hex(parts[3]);
    if (!salt || salt->empty() || !hash || hash->size() != kHashBytes)
        return std::nullopt;
    h.salt = std::move(*salt);
    h.hash = std::move(*hash);
    return h;
}

} // namespace

std::string hash_password(std::string_view password, unsigned iterations)
{
    unsigned char salt[16];
    if (RAND_bytes(salt, sizeof salt) != 1)
        throw std::runtime_error("RAND_bytes failed");
    auto hash = derive(password, salt, iterations);
    return fmt::format("{}${}${}${}", kScheme, iterations, to_hex(salt, sizeof salt), to_hex(hash.data(), hash.size()));
}

bool verify_password(std::string_view password, std::string_view stored_hash)
{
    auto parsed = parse_hash(stored_hash);
    if (!parsed)
        return false;
    auto candidate = derive(password, parsed->salt, parsed->iterations);
    return CRYPTO_memcmp(candidate.data(), parsed->hash.data(), kHashBytes) == 0;
}

std::vector<CredentialRecord> parse_credentials(std::istream& in)
{
    std::vector<CredentialRecord> out;
    std::set<std::string, std::less<>> seen;
    std::string line;
    for (int lineno = 1; std::getline(in, line); ++lineno) {
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        std::string_view v = line;
        std::size_t first = v.find_first_not_of(" \t");
        if (first == std::string_view::npos || v[first] == '#')
            continue;
        std::size_t c1 = v.find(':');
        std::size_t c2 = c1 == std::string_view::npos ? c1 : v.find(':', c1 + 1);
        if (c2 == std::string_view::npos || v.find(':', c2 + 1) != std::string_view::npos)
            throw CredentialsError(fmt::format("line {}: expected user:hash:groups", lineno));
        CredentialRecord rec;
        rec.user = v.substr(0, c1);
        rec.password_hash = v.substr(c1 + 1, c2 - c1 - 1);
        std::string_view groups = v.substr(c2 + 1);
        while (!groups.empty()) {
            std::size_t comma = groups.find(',');
            std::string_view g = groups.substr(0, comma);
            if (!is_valid_identifier(g))
                throw CredentialsError(fmt::format("line {}: invalid group '{}'", lineno, g));
            rec.groups.emplace_back(g);
            if (comma == std::string_view::npos)
                break;
            groups.remove_prefix(comma + 1);
        }
        if (!is_valid_identifier(rec.user))
            throw CredentialsError(fmt::format("line {}: invalid user name '{}'", lineno, rec.user));
        if (!parse_hash(rec.password_hash))
            throw CredentialsError(fmt::format("line {}: unrecognised password hash for '{}'", lineno, rec.user));
        if (rec.groups.empty())
            throw CredentialsError(fmt::format("line {}: user '{}' has no groups", lineno, rec.user));
        if (!seen.insert(rec.user).second)
            throw CredentialsError(fmt::format("line {}: duplicate user '{}'", lineno, rec.user));
        out.push_back(std::move(rec));
    }
    return out;
}

FlatFileBackend::FlatFileBackend(std::vector<CredentialRecord> records)
{
    unsigned iterations = 1000;
    for (auto& r : records) {
        if (auto h = parse_hash(r.password_hash))
            iterations = std::max(iterations, h->iterations);
        if (records_.contains(r.user))
            throw CredentialsError(fmt::format("duplicate user '{}'", r.user));
        std::string key = r.user;
        records_.emplace(std::move(key), std::move(r));
    }
    // Unknown users are checked against this so they cost as much as a
    // wrong password.
    dummy_hash_ = hash_password("unknown-user", iterations);
}

FlatFileBackend FlatFileBackend::load(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw CredentialsError(fmt::format("cannot read credentials file {}", path.string()));
    try {
        return FlatFileBackend(parse_credentials(in));
    } catch (const CredentialsError& e) {
        throw CredentialsError(fmt::format("{}: {}", path.string(), e.what()));
    }
}

VerifyResult FlatFileBackend::verify(std::string_view user, std::string_view password)
{
    auto it = records_.find(user);
    if (it == records_.end()) {
        verify_password(password, dummy_hash_);
        return VerifyResult::failure();
    }
    if (!verify_password(password, it->second.password_hash))
        return VerifyResult::failure();
    return VerifyResult{true, it->second.groups};
}

} // namespace ipgate
