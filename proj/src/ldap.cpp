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

#include "ipgate/ldap.hpp"
#include "ipgate/http.hpp"
#include "ipgate/net.hpp"
#include "ipgate/session_store.hpp"

#include <array>
#include <functional>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

namespace ipgate {

namespace ber {

namespace {

void append_length(std::string& out, std::size_t len)
{
    if (len < 0x80) {
        out.push_back(static_cast<char>(len));
        return;
    }
    std::array<std::uint8_t, sizeof(std::size_t)> bytes{};
    int n = 0;
    for (std::size_t v = len; v != 0; v >>= 8)
        bytes[static_cast<std::size_t>(n++)] = static_cast<std::uint8_t>(v & 0xff);
    out.push_back(static_cast<char>(0x80 | n));
    while (n > 0)
        out.push_back(static_cast<char>(bytes[static_cast<std::size_t>(--n)]));
}

struct Header {
    std::uint8_t tag;
    std::size_t header_len;
    std::size_t content_len;
};

std::optional<Header> read_header(std::string_view buf)
{
    if (buf.size() < 2)
        return std::nullopt;
    auto tag = static_cast<std::uint8_t>(buf[0]);
    if ((tag & 0x1f) == 0x1f)
        throw DecodeError("multi-byte tags are not supported");
    auto first = static_cast<std::uint8_t>(buf[1]);
    if (first < 0x80)
        return Header{tag, 2, first};
    std::size_t n = first & 0x7f;
    if (n == 0 || n > 4)
        throw DecodeError("unsupported BER length form");
    if (buf.size() < 2 + n)
        return std::nullopt;
    std::size_t len = 0;
    for (std::size_t i = 0; i < n; ++i)
        len = (len << 8) | static_cast<std::uint8_t>(buf[2 + i]);
    return Header{tag, 2 + n, len};
}

} // namespace

void Writer::raw(std::uint8_t tag, std::string_view content)
{
    out_.push_back(static_cast<char>(tag));
    append_length(out_, content.size());
    out_.append(content);
}

void Writer::integer(std::int64_t value, std::uint8_t tag)
{
    std::string content;
    // Minimal two's complement, most significant byte first.
    for (int shift = 56; shift >= 0; shift -= 8) {
        auto byte = static_cast<std::uint8_t>((value >> shift) & 0xff);
        if (content.empty() && shift > 0) {
            auto next = static_cast<std::uint8_t>((value >> (shift - 8)) & 0xff);
            bool redundant = (byte == 0x00 && !(next & 0x80)) || (byte == 0xff && (next & 0x80));
            if (redundant)
                continue;
        }
        content.push_back(static_cast<char>(byte));
    }
    raw(tag, content);
}

void Writer::octets(std::string_view value, std::uint8_t tag)
{
    raw(tag, value);
}

void Writer::boolean(bool value)
{
    raw(tag::kBoolean, value ? std::string_view("\xff", 1) : std::string_view("\x00", 1));
}

Element Reader::next()
{
    auto h = read_header(data_);
    if (!h || data_.size() < h->header_len + h->content_len)
        throw DecodeError("truncated BER element");
    Element e{h->tag, data_.substr(h->header_len, h->content_len)};
    data_.remove_prefix(h->header_len + h->content_len);
    return e;
}

Element Reader::expect(std::uint8_t tag)
{
    Element e = next();
    if (e.tag != tag)
        throw DecodeError(fmt::format("expected BER tag 0x{:02x}, got 0x{:02x}", tag, e.tag));
    return e;
}

std::int64_t Reader::to_integer(std::string_view content)
{
    if (content.empty() || content.size() > 8)
        throw DecodeError("bad BER integer length");
    std::int64_t v = (static_cast<std::uint8_t>(content[0]) & 0x80) ? -1 : 0;
    for (char c : content)
        v = static_cast<std::int64_t>((static_cast<std::uint64_t>(v) << 8) | static_cast<std::uint8_t>(c));
    return v;
}

std::optional<std::size_t> element_size(std::string_view buf)
{
    auto h = read_header(buf);
    if (!h || buf.size() < h->header_len + h->content_len)
        return std::nullopt;
    return h->header_len + h->content_len;
}

} // namespace ber

namespace ldap {

namespace {

std::string message(int message_id, const std::function<void(ber::Writer&)>& op)
{
    ber::Writer w;
    w.constructed(ber::tag::kSequence, [&](ber::Writer& m) {
        m.integer(message_id);
        op(m);
    });
    return w.bytes();
}

} // namespace

std::string encode_bind_request(int message_id, std::string_view dn, std::string_view password)
{
    return message(message_id, [&](ber::Writer& m) {
        m.constructed(kBindRequest, [&](ber::Writer& b) {
            b.integer(3);
            b.octets(dn);
            b.octets(password, kSimpleAuth);
        });
    });
}

std::string encode_search_request(int message_id, std::string_view base_dn, std::string_view attr,
                                  std::string_view value, std::string_view wanted_attr)
{
    return message(message_id, [&](ber::Writer& m) {
        m.constructed(kSearchRequest, [&](ber::Writer& s) {
            s.octets(base_dn);
            s.enumerated(2); // wholeSubtree
            s.enumerated(0); // neverDerefAliases
            s.integer(0);    // no size limit
            s.integer(0);    // no time limit
            s.boolean(false);
            s.constructed(kFilterEquality, [&](ber::Writer& f) {
                f.octets(attr);
                f.octets(value);
            });
            s.constructed(ber::tag::kSequence, [&](ber::Writer& a) { a.octets(wanted_attr); });
        });
    });
}

std::string encode_unbind_request(int message_id)
{
    return message(message_id, [](ber::Writer& m) { m.raw(kUnbindRequest, {}); });
}

std::string escape_dn_value(std::string_view value)
{
    std::string out;
    for (std::size_t i = 0; i < value.size(); ++i) {
        char c = value[i];
        bool special = std::string_view(",+\"\\<>;=").find(c) != std::string_view::npos;
        bool edge_space = c == ' ' && (i == 0 || i + 1 == value.size());
        if (special || edge_space || (c == '#' && i == 0))
            out.push_back('\\');
        out.push_back(c);
    }
    return out;
}

} // namespace ldap

namespace {

struct LdapMessage {
    std::int64_t id = 0;
    std::uint8_t op = 0;
    std::string body; ///< content of the protocol op
};

class Connection {
public:
    Connection(Socket sock) : sock_(std::move(sock)) {}

    void send(std::string_view bytes) { sock_.write_all(bytes); }

    LdapMessage receive()
    {
        for (;;) {
            if (auto size = ber::element_size(buf_)) {
                std::string raw = buf_.substr(0, *size);
                buf_.erase(0, *size);
                ber::Reader outer(raw);
                ber::Reader msg(outer.expect(ber::tag::kSequence).content);
                LdapMessage m;
                m.id = ber::Reader::to_integer(msg.expect(ber::tag::kInteger).content);
                ber::Element op = msg.next();
                m.op = op.tag;
                m.body = op.content;
                return m;
            }
            std::array<char, 4096> chunk;
            std::size_t n = sock_.read_some(chunk);
            if (n == 0)
                throw IoError("directory closed the connection");
            buf_.append(chunk.data(), n);
            if (buf_.size() > 1024 * 1024)
                throw ber::DecodeError("oversized LDAP message");
        }
    }

private:
    Socket sock_;
    std::string buf_;
};

int result_code(const LdapMessage& m)
{
    ber::Reader r(m.body);
    return static_cast<int>(ber::Reader::to_integer(r.expect(ber::tag::kEnumerated).content));
}

bool server_side_outage(int code)
{
    // operationsError, busy, unavailable, other
    return code == 1 || code == 51 || code == 52 || code == 80;
}

} // namespace

VerifyResult LdapBackend::verify(std::string_view user, std::string_view password)
{
    // An empty password would be an anonymous bind, which servers accept.
    if (!is_valid_identifier(user) || password.empty())
        return VerifyResult::failure();

    auto addr = resolve_ipv4(config_.host);
    if (!addr)
        throw BackendUnavailable(fmt::format("cannot resolve directory host {}", config_.host));

    std::string dn = config_.user_dn_template;
    if (auto pos = dn.find("{user}"); pos != std::string::npos)
        dn.replace(pos, 6, ldap::escape_dn_value(user));

    try {
        Socket sock = connect_tcp(Endpoint{*addr, config_.port}, config_.timeout);
        sock.set_timeouts(config_.timeout);
        Connection conn(std::move(sock));

        conn.send(ldap::encode_bind_request(1, dn, password));
        LdapMessage bind = conn.receive();
        if (bind.op != ldap::kBindResponse || bind.id != 1)
            throw ber::DecodeError("unexpected reply to bind");
        int code = result_code(bind);
        if (server_side_outage(code))
            throw BackendUnavailable(fmt::format("directory refused bind with result code {}", code));
        if (code != ldap::kSuccess) {
            conn.send(ldap::encode_unbind_request(2));
            return VerifyResult::failure();
        }

        std::vector<std::string> groups;
        if (config_.group_base_dn.empty()) {
            groups.push_back(config_.default_group);
        } else {
            std::string member = config_.member_is_dn ? dn : std::string(user);
            conn.send(ldap::encode_search_request(2, config_.group_base_dn, config_.group_member_attr, member,
                                                  config_.group_name_attr));
            for (;;) {
                LdapMessage m = conn.receive();
                if (m.id != 2)
                    throw ber::DecodeError("unexpected message id in search results");
                if (m.op == ldap::kSearchResultDone) {
                    if (int done = result_code(m); done != ldap::kSuccess)
                        throw BackendUnavailable(fmt::format("group search failed with result code {}", done));
                    break;
                }
                if (m.op != ldap::kSearchResultEntry)
                    continue;
                ber::Reader entry(m.body);
                entry.expect(ber::tag::kOctetString); // objectName
                ber::Reader attrs(entry.expect(ber::tag::kSequence).content);
                while (!attrs.done()) {
                    ber::Reader attr(attrs.expect(ber::tag::kSequence).content);
                    std::string_view type = attr.expect(ber::tag::kOctetString).content;
                    ber::Reader vals(attr.expect(ber::tag::kSet).content);
                    bool wanted = iequals(type, config_.group_name_attr);
                    while (!vals.done()) {
                        std::string_view v = vals.expect(ber::tag::kOctetString).content;
                        if (wanted && is_valid_identifier(v))
                            groups.emplace_back(v);
                    }
                }
            }
        }
        conn.send(ldap::encode_unbind_request(3));
        if (groups.empty()) {
            spdlog::info("ldap: {} authenticated but belongs to no group", user);
            return VerifyResult::failure();
        }
        return VerifyResult{true, std::move(groups)};
    } catch (const IoError& e) {
        throw BackendUnavailable(fmt::format("directory {}:{}: {}", config_.host, config_.port, e.what()));
    } catch (const ber::DecodeError& e) {
        throw BackendUnavailable(fmt::format("directory {}:{} sent a malformed reply: {}", config_.host,
                                             config_.port, e.what()));
    }
}

} // namespace ipgate
