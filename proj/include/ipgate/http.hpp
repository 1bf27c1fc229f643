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

#include "ipgate/net.hpp"
#include "ipgate/uri.hpp"

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace ipgate {

class HttpParseError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Header {
    std::string name;
    std::string value;
};

/// Ordered header list with case-insensitive lookup.
class HeaderMap {
public:
    void add(std::string name, std::string value);
    void set(std::string_view name, std::string value);
    std::optional<std::string_view> get(std::string_view name) const;
    bool contains(std::string_view name) const { return get(name).has_value(); }
    std::size_t remove(std::string_view name);

    /// True when some comma-separated element of `name` equals token
    /// (case-insensitive).
    bool has_token(std::string_view name, std::string_view token) const;

    auto begin() const { return headers_.begin(); }
    auto end() const { return headers_.end(); }
    std::size_t size() const noexcept { return headers_.size(); }

private:
    std::vector<Header> headers_;
};

bool iequals(std::string_view a, std::string_view b) noexcept;

struct RequestHead {
    std::string method;
    std::string target;
    std::string version; ///< "HTTP/1.1"
    HeaderMap headers;
};

struct ResponseHead {
    std::string version;
    int status = 0;
    std::string reason;
    HeaderMap headers;
};

/// Throws HttpParseError. Leading blank lines are skipped.
RequestHead parse_request_head(std::string_view head);
ResponseHead parse_response_head(std::string_view head);

std::string serialize(const RequestHead& head);
std::string serialize(const ResponseHead& head);

std::string_view reason_phrase(int status) noexcept;

/// Removes Connection, Keep-Alive, Proxy-Authenticate, Proxy-Authorization,
/// Proxy-Connection, TE, Trailer, Transfer-Encoding, Upgrade and every
/// header named in Connection.
void strip_hop_by_hop(HeaderMap& headers);

/// Whether the client wants the connection kept after this request.
bool wants_keep_alive(const RequestHead& head);

enum class BodyKind { None, Length, Chunked, UntilClose };

struct BodyFraming {
    BodyKind kind = BodyKind::None;
    std::uint64_t length = 0;
};

/// Throws HttpParseError for conflicting or unsupported framing.
BodyFraming request_framing(const RequestHead& head);
BodyFraming response_framing(std::string_view request_method, const ResponseHead& head);

/// Streams a body from `in` to `out` through a fixed buffer. Chunked bodies
/// are copied with their framing when passthrough is set and decoded
/// otherwise. Returns payload bytes. Throws IoError if `in` ends early.
std::uint64_t relay_body(BufferedReader& in, Socket& out, const BodyFraming& framing, bool chunk_passthrough);

/// Reads a whole body into memory, refusing more than `limit` bytes.
std::string read_body(BufferedReader& in, const BodyFraming& framing, std::size_t limit);

/// Where a request should go, reconstructed from its target and Host header.
struct ResolvedTarget {
    std::string host;
    std::uint16_t port = 80;
    std::string path;
    std::string absolute_uri;
};

/// Origin-form target + Host header -> http://host[:port]/path.
/// Absolute-form targets are returned unchanged. Throws HttpParseError when
/// the Host header is missing or malformed, or the target has another form.
ResolvedTarget reconstruct_uri(const RequestHead& request);

/// Writes a complete response with a Content-Length body.
void write_simple_response(Socket& out, int status, std::string_view content_type, std::string_view body,
                           bool keep_alive, const HeaderMap& extra = {});

} // namespace ipgate
