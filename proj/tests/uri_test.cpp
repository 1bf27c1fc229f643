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


#include "ipgate/http.hpp"
#include "ipgate/ipv4.hpp"
#include "ipgate/uri.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace ipgate;

TEST(Ipv4Address, ParsesDottedQuads)
{
    EXPECT_EQ(Ipv4Address::parse("192.168.1.10")->value(), 0xc0a8010au);
    EXPECT_EQ(Ipv4Address::parse("0.0.0.0")->value(), 0u);
    EXPECT_EQ(Ipv4Address::parse("255.255.255.255")->value(), 0xffffffffu);
    EXPECT_EQ(Ipv4Address{0x0a000005}.to_string(), "10.0.0.5");
}

TEST(Ipv4Address, RejectsEverythingElse)
{
    for (const char* bad : {"", "1.2.3", "1.2.3.4.5", "256.1.1.1", "01.2.3.4", "1.2.3.-4", "a.b.c.d", " 1.2.3.4",
                            "1.2.3.4 ", "1..3.4", "1.2.3.4/24"})
        EXPECT_FALSE(Ipv4Address::parse(bad)) << bad;
}

TEST(Ipv4Address, Ipv6IsRejectedWithItsOwnMessage)
{
    try {
        Ipv4Address::from_string("fe80::1");
        FAIL() << "accepted an IPv6 address";
    } catch (const InvalidAddress& e) {
        EXPECT_NE(std::string(e.what()).find("IPv6"), std::string::npos) << e.what();
    }
    EXPECT_THROW(Ipv4Address::from_string("nope"), InvalidAddress);
}

TEST(UrlCoding, RoundTrips)
{
    EXPECT_EQ(url_encode("http://example.com/"), "http%3A%2F%2Fexample.com%2F");
    EXPECT_EQ(url_encode("a-b_c.d~e"), "a-b_c.d~e");
    EXPECT_EQ(url_decode("a%20b"), "a b");
    EXPECT_EQ(url_decode("a+b", true), "a b");
    EXPECT_EQ(url_decode("a+b"), "a+b");
    EXPECT_FALSE(url_decode("%"));
    EXPECT_FALSE(url_decode("%4"));
    EXPECT_FALSE(url_decode("%zz"));

    std::mt19937 rng(3);
    for (int i = 0; i < 1000; ++i) {
        std::string s(std::uniform_int_distribution<int>(0, 40)(rng), '\0');
        for (char& c : s)
            c = static_cast<char>(std::uniform_int_distribution<int>(0, 255)(rng));
        EXPECT_EQ(url_decode(url_encode(s)), s);
    }
}

TEST(FormParsing, Fields)
{
    auto f = parse_form("user=alice&password=p%40ss+word&duration=3600&empty=&flag");
    EXPECT_EQ(f["user"], "alice");
    EXPECT_EQ(f["password"], "p@ss word");
    EXPECT_EQ(f["duration"], "3600");
    EXPECT_EQ(f["empty"], "");
    EXPECT_TRUE(f.contains("flag"));
}

TEST(HtmlEscape, SpecialCharacters)
{
    EXPECT_EQ(html_escape("<a href=\"x\">&'</a>"), "&lt;a href=&quot;x&quot;&gt;&amp;&#39;&lt;/a&gt;");
}

TEST(HostPort, Parsing)
{
    EXPECT_EQ(parse_host_port("Example.COM"), (HostPort{"example.com", 80}));
    EXPECT_EQ(parse_host_port("example.com:8080"), (HostPort{"example.com", 8080}));
    EXPECT_FALSE(parse_host_port(""));
    EXPECT_FALSE(parse_host_port(":80"));
    EXPECT_FALSE(parse_host_port("example.com:0"));
    EXPECT_FALSE(parse_host_port("example.com:65536"));
    EXPECT_FALSE(parse_host_port("example.com:"));
    EXPECT_FALSE(parse_host_port("user@example.com"));
    EXPECT_FALSE(parse_host_port("[::1]:80"));
    EXPECT_FALSE(parse_host_port("exa mple.com"));
}

TEST(AbsoluteUri, Parsing)
{
    EXPECT_EQ(parse_absolute_uri("http://example.com"), (AbsoluteUri{"example.com", 80, "/"}));
    EXPECT_EQ(parse_absolute_uri("HTTP://Example.com:8080/p?q=1#frag"), (AbsoluteUri{"example.com", 8080, "/p?q=1"}));
    EXPECT_FALSE(parse_absolute_uri("https://example.com/"));
    EXPECT_FALSE(parse_absolute_uri("example.com/"));
    EXPECT_EQ(make_absolute_uri("example.com", 80, "/x"), "http://example.com/x");
    EXPECT_EQ(make_absolute_uri("example.com", 8080, "/x"), "http://example.com:8080/x");
}

namespace {

RequestHead head(std::string target, std::vector<std::pair<std::string, std::string>> headers = {})
{
    RequestHead h;
    h.method = "GET";
    h.target = std::move(target);
    h.version = "HTTP/1.1";
    for (auto& [n, v] : headers)
        h.headers.add(n, v);
    return h;
}

} // namespace

TEST(ReconstructUri, Examples)
{
    EXPECT_EQ(reconstruct_uri(head("/index.html", {{"Host", "example.com"}})).absolute_uri,
              "http://example.com/index.html");
    EXPECT_EQ(reconstruct_uri(head("/p?q=1", {{"Host", "example.com:8080"}})).absolute_uri,
              "http://example.com:8080/p?q=1");
    EXPECT_EQ(reconstruct_uri(head("http://example.com/x")).absolute_uri, "http://example.com/x");
}

TEST(ReconstructUri, HostIsLowercasedAndPortRecorded)
{
    ResolvedTarget t = reconstruct_uri(head("/", {{"host", "WWW.Example.com:81"}}));
    EXPECT_EQ(t.host, "www.example.com");
    EXPECT_EQ(t.port, 81);
    EXPECT_EQ(t.path, "/");
}

TEST(ReconstructUri, Errors)
{
    EXPECT_THROW(reconstruct_uri(head("/index.html")), HttpParseError);
    EXPECT_THROW(reconstruct_uri(head("/", {{"Host", "a.example"}, {"Host", "b.example"}})), HttpParseError);
    EXPECT_THROW(reconstruct_uri(head("/", {{"Host", ""}})), HttpParseError);
    EXPECT_THROW(reconstruct_uri(head("*", {{"Host", "a.example"}})), HttpParseError);
    EXPECT_THROW(reconstruct_uri(head("example.com:443", {{"Host", "a.example"}})), HttpParseError);
}

// Random (host, port, path) triples survive reconstruction and re-parsing.
TEST(ReconstructUri, RoundTripProperty)
{
    std::mt19937 rng(99);
    auto pick = [&](std::string_view alphabet) {
        return alphabet[std::uniform_int_distribution<std::size_t>(0, alphabet.size() - 1)(rng)];
    };
    const std::string_view label_chars = "abcdefghijklmnopqrstuvwxyz0123456789-";
    const std::string_view path_chars = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789-._~!$&'()*+,;=:@/%";

    for (int i = 0; i < 2000; ++i) {
        std::string host;
        int labels = std::uniform_int_distribution<int>(1, 4)(rng);
        for (int l = 0; l < labels; ++l) {
            if (l)
                host += '.';
            int len = std::uniform_int_distribution<int>(1, 12)(rng);
            for (int k = 0; k < len; ++k)
                host += pick(label_chars);
        }
        auto port = static_cast<std::uint16_t>(std::uniform_int_distribution<int>(1, 65535)(rng));
        std::string path = "/";
        int plen = std::uniform_int_distribution<int>(0, 30)(rng);
        for (int k = 0; k < plen; ++k)
            path += pick(path_chars);
        if (std::uniform_int_distribution<int>(0, 2)(rng) == 0)
            path += "?q=" + std::to_string(i);

        std::string host_header = port == 80 ? host : host + ":" + std::to_string(port);
        ResolvedTarget t = reconstruct_uri(head(path, {{"Host", host_header}}));
        auto back = parse_absolute_uri(t.absolute_uri);
        ASSERT_TRUE(back) << t.absolute_uri;
        EXPECT_EQ(back->host, host);
        EXPECT_EQ(back->port, port);
        EXPECT_EQ(back->path, path);
        // The absolute form is its own reconstruction.
        EXPECT_EQ(reconstruct_uri(head(t.absolute_uri)).absolute_uri, t.absolute_uri);
    }
}
