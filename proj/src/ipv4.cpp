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

#include "ipgate/ipv4.hpp"

#include <charconv>

#include <fmt/format.h>

namespace ipgate {

std::optional<Ipv4Address> Ipv4Address::parse(std::string_view text) noexcept
{
    std::uint32_t value = 0;
    std::size_t pos = 0;
    for (int octet = 0; octet < 4; ++octet) {
        if (octet > 0) {
            if (pos >= text.size() || text[pos] != '.')
                return std::nullopt;
            ++pos;
        }
        std::size_t start = pos;
        while (pos < text.size() && text[pos] >= '0' && text[pos] <= '9')
            ++pos;
        std::size_t len = pos - start;
        if (len == 0 || len > 3 || (len > 1 && text[start] == '0'))
            return std::nullopt;
        unsigned part = 0;
        std::from_chars(text.data() + start, text.data() + pos, part);
        if (part > 255)
            return std::nullopt;
        value = (value << 8) | part;
    }
    if (pos != text.size())
        return std::nullopt;
    return Ipv4Address{value};
}

Ipv4Address Ipv4Address::from_string(std::string_view text)
{
    if (auto a = parse(text))
        return *a;
    if (text.find(':') != std::string_view::npos)
        throw InvalidAddress(fmt::format("IPv6 addresses are not supported: '{}'", text));
    throw InvalidAddress(fmt::format("not an IPv4 address: '{}'", text));
}

std::string Ipv4Address::to_string() const
{
    return fmt::format("{}.{}.{}.{}", value_ >> 24, (value_ >> 16) & 0xff, (value_ >> 8) & 0xff,
                       value_ & 0xff);
}

} // namespace ipgate
