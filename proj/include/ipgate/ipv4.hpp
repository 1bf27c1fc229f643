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

#include <compare>
#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace ipgate {

class InvalidAddress : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// An IPv4 address held in host byte order. Only the canonical dotted-quad
/// form is accepted: four decimal octets, no leading zeros, no whitespace.
class Ipv4Address {
public:
    constexpr Ipv4Address() = default;
    constexpr explicit Ipv4Address(std::uint32_t host_order) : value_(host_order) {}

    static std::optional<Ipv4Address> parse(std::string_view text) noexcept;

    /// Like parse() but throws InvalidAddress; IPv6 input gets its own message.
    static Ipv4Address from_string(std::string_view text);

    constexpr std::uint32_t value() const noexcept { return value_; }
    std::string to_string() const;

    constexpr auto operator<=>(const Ipv4Address&) const = default;

private:
    std::uint32_t value_ = 0;
};

} // namespace ipgate

template <>
struct std::hash<ipgate::Ipv4Address> {
    std::size_t operator()(const ipgate::Ipv4Address& a) const noexcept
    {
        return std::hash<std::uint32_t>{}(a.value());
    }
};
