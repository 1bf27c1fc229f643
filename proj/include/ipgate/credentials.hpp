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

#include <filesystem>
#include <iosfwd>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace ipgate {

struct VerifyResult {
    bool success = false;
    std::vector<std::string> groups; ///< empty on failure

    static VerifyResult failure() { return {}; }
};

/// The directory could not answer; distinct from a rejected password.
class BackendUnavailable : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class CredentialBackend {
public:
    virtual ~CredentialBackend() = default;
    /// Never mutates backend data. Throws BackendUnavailable.
    virtual VerifyResult verify(std::string_view user, std::string_view password) = 0;
};

class CredentialsError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// "pbkdf2-sha256$<iterations>$<salt hex>$<hash hex>" with a random salt.
std::string hash_password(std::string_view password, unsigned iterations = 100'000);

/// Recomputes the stored hash for `password` and compares in constant time.
/// Malformed stored hashes never match.
bool verify_password(std::string_view password, std::string_view stored_hash);

struct CredentialRecord {
    std::string user;
    std::string password_hash;
    std::vector<std::string> groups;
};

/// Credentials file grammar, one record per line:
///
///     # comment
///     user:pbkdf2-sha256$iter$salt$hash:group1,group2
///
/// Blank lines and lines starting with '#' are ignored. Throws
/// CredentialsError with the line number for malformed lines and
/// duplicate users.
std::vector<CredentialRecord> parse_credentials(std::istream& in);

class FlatFileBackend final : public CredentialBackend {
public:
    explicit FlatFileBackend(std::vector<CredentialRecord> records);

    /// Throws CredentialsError when the file is unreadable or malformed.
    static FlatFileBackend load(const std::filesystem::path& path);

    VerifyResult verify(std::string_view user, std::string_view password) override;

private:
    std::map<std::string, CredentialRecord, std::less<>> records_;
    std::string dummy_hash_;
};

} // namespace ipgate
