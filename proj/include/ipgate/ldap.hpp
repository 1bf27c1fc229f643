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

// Minimal LDAPv3 client: simple bind and one subtree search, enough to
// check a password against a directory and read the user's groups.

#pragma once

#include "ipgate/config.hpp"
#include "ipgate/credentials.hpp"

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace ipgate {

namespace ber {

class DecodeError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace tag {
inline constexpr std::uint8_t kBoolean = 0x01;
inline constexpr std::uint8_t kInteger = 0x02;
inline constexpr std::uint8_t kOctetString = 0x04;
inline constexpr std::uint8_t kEnumerated = 0x0a;
inline constexpr std::uint8_t kSequence = 0x30;
inline constexpr std::uint8_t kSet = 0x31;
} // namespace tag

class Writer {
public:
    void integer(std::int64_t value, std::uint8_t tag = tag::kInteger);
    void octets(std::string_view value, std::uint8_t tag = tag::kOctetString);
    void boolean(bool value);
    void enumerated(std::int64_t value) { integer(value, tag::kEnumerated); }

    /// Wraps whatever `fill` writes into one constructed element.
    template <typename Fill>
    void constructed(std::uint8_t tag, Fill&& fill)
    {
        Writer inner;
        fill(inner);
        raw(tag, inner.out_);
    }

    void raw(std::uint8_t tag, std::string_view content);
    const std::string& bytes() const noexcept { return out_; }

private:
    std::string out_;
};

struct Element {
    std::uint8_t tag = 0;
    std::string_view content;
};

class Reader {
public:
    explicit Reader(std::string_view data) : data_(data) {}

    bool done() const noexcept { return data_.empty(); }
    Element next();
    /// next(), checking the tag.
    Element expect(std::uint8_t tag);

    static std::int64_t to_integer(std::string_view content);

private:
    std::string_view data_;
};

/// Size of the first complete element in `buf`, or nullopt if more bytes
/// are needed. Throws DecodeError on malformed lengths.
std::optional<std::size_t> element_size(std::string_view buf);

} // namespace ber

namespace ldap {

inline constexpr std::uint8_t kBindRequest = 0x60;
inline constexpr std::uint8_t kBindResponse = 0x61;
inline constexpr std::uint8_t kUnbindRequest = 0x42;
inline constexpr std::uint8_t kSearchRequest = 0x63;
inline constexpr std::uint8_t kSearchResultEntry = 0x64;
inline constexpr std::uint8_t kSearchResultDone = 0x65;
inline constexpr std::uint8_t kSearchResultReference = 0x73;
inline constexpr std::uint8_t kSimpleAuth = 0x80;
inline constexpr std::uint8_t kFilterEquality = 0xa3;

inline constexpr int kSuccess = 0;
inline constexpr int kInvalidCredentials = 49;

std::string encode_bind_request(int message_id, std::string_view dn, std::string_view password);
std::string encode_search_request(int message_id, std::string_view base_dn, std::string_view attr,
                                  std::string_view value, std::string_view wanted_attr);
std::string encode_unbind_request(int message_id);

/// Escapes a value for use inside a DN attribute (RFC 4514).
std::string escape_dn_value(std::string_view value);

} // namespace ldap

/// Binds as the user's DN; on success reads groups through the configured
/// search or assigns the default group. Network failures and server-side
/// unavailability raise BackendUnavailable.
class LdapBackend final : public CredentialBackend {
public:
    explicit LdapBackend(LdapConfig config) : config_(std::move(config)) {}

    VerifyResult verify(std::string_view user, std::string_view password) override;

private:
    LdapConfig config_;
};

} // namespace ipgate
