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


#include "ipgate/harness.hpp"

#include "support.hpp"

#include <gtest/gtest.h>

#include <sstream>

using namespace ipgate;
using namespace ipgate::harness;
using namespace ipgate::test;

namespace {

Scenario parse(const std::string& text)
{
    std::istringstream in(text);
    return parse_scenario(in);
}

std::string parse_error(const std::string& text)
{
    try {
        parse(text);
    } catch (const ScenarioError& e) {
        return e.what();
    }
    return "";
}

std::vector<std::string> verdicts(const ScenarioTranscript& t)
{
    std::vector<std::string> out;
    for (const auto& e : t)
        if (e.action == ActionKind::Request)
            out.emplace_back(e.verdict ? to_string(*e.verdict) : "-");
    return out;
}

std::vector<int> statuses(const ScenarioTranscript& t)
{
    std::vector<int> out;
    for (const auto& e : t)
        out.push_back(e.status);
    return out;
}

const std::string kClients = R"(
client ann 10.0.0.11
client bob 10.0.0.12
client cat 10.0.0.13
user alice wonderland internet
)";

const std::string kScript = R"(
ann request http://news.example/
bob request http://news.example/
ann login alice wonderland 600
ann request http://news.example/
bob request http://news.example/
cat request http://news.example/
advance 601
ann request http://news.example/
)";

} // namespace

TEST(ScenarioParser, SettingsAndActions)
{
    Scenario sc = parse("# comment\ntopology type2\ngateway 192.168.1.1\n" + kClients +
                        "policy blacklist\ndomains Video.example .social.example\nauth-group internet\n"
                        "cache-ttl 0\nmax-duration 3600\ninactivity 120\n" +
                        kScript + "parallel\nann request http://a.example\nbob logout\nend\n");
    EXPECT_EQ(sc.topology.kind, TopologyKind::Type2);
    EXPECT_EQ(sc.topology.gateway_ip, ip("192.168.1.1"));
    ASSERT_EQ(sc.topology.clients.size(), 3u);
    EXPECT_EQ(sc.policy.mode, AclMode::Blacklist);
    EXPECT_EQ(sc.policy.domain_list, (std::vector<std::string>{"video.example", ".social.example"}));
    EXPECT_EQ(sc.policy.auth_cache_ttl, Seconds{0});
    EXPECT_EQ(sc.session.max_duration, Seconds{3600});
    EXPECT_EQ(sc.session.inactivity, Seconds{120});
    ASSERT_EQ(sc.users.size(), 1u);
    EXPECT_EQ(sc.users[0].groups, groups({"internet"}));
    ASSERT_EQ(sc.actions.size(), 10u);
    EXPECT_EQ(sc.actions[2].kind, ActionKind::Login);
    EXPECT_EQ(sc.actions[2].seconds, Seconds{600});
    EXPECT_EQ(sc.actions[6].kind, ActionKind::AdvanceClock);
    EXPECT_EQ(sc.actions[8].uri, "http://a.example/");
    EXPECT_EQ(sc.actions[8].parallel_group, 0);
    EXPECT_EQ(sc.actions[9].kind, ActionKind::Logout);
    EXPECT_EQ(sc.actions[9].parallel_group, 0);
}

TEST(ScenarioParser, RejectsMalformedScripts)
{
    EXPECT_NE(parse_error(kClients + "dan request http://x.example/\n").find("unknown client 'dan'"),
              std::string::npos);
    EXPECT_NE(parse_error("topology type3\n").find("unknown topology"), std::string::npos);
    EXPECT_NE(parse_error(kClients + "ann request http://x/\nclient dan 10.0.0.14\n").find("before the first action"),
              std::string::npos);
    EXPECT_NE(parse_error(kClients + "ann request ftp://x/\n").find("not an http URI"), std::string::npos);
    EXPECT_NE(parse_error(kClients + "ann fly\n").find("unknown action"), std::string::npos);
    EXPECT_NE(parse_error(kClients + "parallel\nann logout\n").find("never closed"), std::string::npos);
    EXPECT_NE(parse_error(kClients + "parallel\nadvance 5\nend\n").find("not allowed inside"), std::string::npos);
    EXPECT_NE(parse_error(kClients + "parallel\nparallel\n").find("do not nest"), std::string::npos);
    EXPECT_NE(parse_error(kClients + "end\n").find("without"), std::string::npos);
    EXPECT_NE(parse_error("client ann 10.0.0.1\n").find("gateway"), std::string::npos);
    EXPECT_NE(parse_error("client ann 10.0.0.5\nclient ann 10.0.0.6\n").find("ann"), std::string::npos);
    EXPECT_NE(parse_error("client ann 10.0.0.500\n").find("line 1"), std::string::npos);
    EXPECT_NE(parse_error(kClients + "ann login alice wonderland\n").find("argument"), std::string::npos);
}

TEST(Topology, ApparentSource)
{
    Topology t;
    t.clients = {{"ann", ip("10.0.0.11")}};
    EXPECT_EQ(t.apparent_source(t.clients[0]), ip("10.0.0.11"));
    t.kind = TopologyKind::Type2;
    EXPECT_EQ(t.apparent_source(t.clients[0]), ip("10.0.0.11"));
    t.kind = TopologyKind::Type2NatBroken;
    EXPECT_EQ(t.apparent_source(t.clients[0]), ip("10.0.0.1"));
    EXPECT_EQ(to_string(TopologyKind::Type2NatBroken), "type2-nat-broken");
}

TEST(ScenarioRun, Type1KeepsClientsApart)
{
    ScenarioTranscript t = run_scenario(parse("topology type1\n" + kClients + kScript));
    ASSERT_EQ(t.size(), 8u);
    EXPECT_EQ(statuses(t), (std::vector<int>{403, 403, 200, 200, 403, 403, 0, 403}));
    EXPECT_EQ(verdicts(t), (std::vector<std::string>{"DenyNeedsLogin", "DenyNeedsLogin", "Allow", "DenyNeedsLogin", "DenyNeedsLogin", "DenyNeedsLogin"}));
    EXPECT_EQ(t[3].seen_ip, ip("10.0.0.11"));
    EXPECT_EQ(t[4].seen_ip, ip("10.0.0.12"));
    EXPECT_EQ(t[3].body, default_body("news.example", "/"));
    EXPECT_EQ(format_transcript_line(t[6]), "0007 2023-11-14T22:23:21Z advance 601s");
}

TEST(ScenarioRun, BrokenNatUnlocksEveryone)
{
    ScenarioTranscript t = run_scenario(parse("topology type2-nat-broken\n" + kClients + kScript));
    EXPECT_EQ(statuses(t), (std::vector<int>{403, 403, 200, 200, 200, 200, 0, 403}));
    EXPECT_EQ(verdicts(t), (std::vector<std::string>{"DenyNeedsLogin", "DenyNeedsLogin", "Allow", "Allow", "Allow", "DenyNeedsLogin"}));
    for (const auto& e : t)
        if (e.action != ActionKind::AdvanceClock)
            EXPECT_EQ(e.seen_ip, ip("10.0.0.1")) << format_transcript_line(e);
    EXPECT_EQ(format_transcript_line(t[4]),
              "0005 2023-11-14T22:13:20Z bob 10.0.0.12 request http://news.example/ status=200 verdict=Allow "
              "seen=10.0.0.1 bytes=" +
                  std::to_string(default_body("news.example", "/").size()));
}

TEST(ScenarioRun, Type1AndType2ProduceIdenticalVerdicts)
{
    std::string script = kScript + "bob login alice wonderland 60\nparallel\nann request http://a.example/x\n"
                                   "bob request http://b.example/y\ncat request http://c.example/z\nend\n"
                                   "ann logout\nann request http://a.example/x\nbob request http://b.example/y\n";
    ScenarioTranscript t1 = run_scenario(parse("topology type1\n" + kClients + script));
    ScenarioTranscript t2 = run_scenario(parse("topology type2\n" + kClients + script));
    EXPECT_EQ(verdicts(t1), verdicts(t2));
    EXPECT_EQ(statuses(t1), statuses(t2));
    ASSERT_EQ(t1.size(), t2.size());
    for (std::size_t i = 0; i < t1.size(); ++i)
        EXPECT_EQ(format_transcript_line(t1[i]), format_transcript_line(t2[i]));
    EXPECT_EQ(verdicts(t1).back(), "Allow");                 // bob still signed in
    EXPECT_EQ(verdicts(t1)[verdicts(t1).size() - 2], "DenyNeedsLogin"); // ann signed out
}

TEST(ScenarioRun, Deterministic)
{
    std::string text = "topology type1\n" + kClients + kScript;
    std::vector<std::string> a, b;
    for (const auto& e : run_scenario(parse(text)))
        a.push_back(format_transcript_line(e));
    for (const auto& e : run_scenario(parse(text)))
        b.push_back(format_transcript_line(e));
    EXPECT_EQ(a, b);
}

TEST(ScenarioRun, TwentyFiveClientsOneLogin)
{
    std::string text = "topology type1\nuser alice wonderland internet\n";
    for (int i = 1; i <= 25; ++i)
        text += "client c" + std::to_string(i) + " 10.0.1." + std::to_string(i) + "\n";
    text += "c7 login alice wonderland 3600\nparallel\n";
    for (int i = 1; i <= 25; ++i)
        text += "c" + std::to_string(i) + " request http://site.example/p" + std::to_string(i) + "\n";
    text += "end\n";
    ScenarioTranscript t = run_scenario(parse(text));
    ASSERT_EQ(t.size(), 26u);
    for (std::size_t i = 1; i < t.size(); ++i) {
        bool is_c7 = t[i].client == "c7";
        EXPECT_EQ(t[i].status, is_c7 ? 200 : 403) << format_transcript_line(t[i]);
        EXPECT_EQ(t[i].verdict, is_c7 ? VerdictAction::Allow : VerdictAction::DenyNeedsLogin);
        EXPECT_EQ(t[i].seen_ip, t[i].client_ip);
    }
}

TEST(Bench, PercentileIsNearestRank)
{
    EXPECT_EQ(percentile({}, 50), 0);
    EXPECT_EQ(percentile({5}, 95), 5);
    EXPECT_EQ(percentile({4, 1, 3, 2}, 50), 2);
    EXPECT_EQ(percentile({4, 1, 3, 2}, 75), 3);
    EXPECT_EQ(percentile({4, 1, 3, 2}, 100), 4);
    std::vector<double> hundred;
    for (int i = 100; i >= 1; --i)
        hundred.push_back(i);
    EXPECT_EQ(percentile(hundred, 95), 95);
    EXPECT_EQ(percentile(hundred, 0), 1);
}

TEST(Bench, SmallRunSucceeds)
{
    LatencySummary s = bench_latency({.clients = 2, .requests_per_client = 5});
    EXPECT_EQ(s.samples, 10u);
    EXPECT_EQ(s.errors, 0u);
    EXPECT_GT(s.proxy_p50_ms, 0);
    EXPECT_NE(format_summary(s).find("samples: 10\nerrors: 0\n"), std::string::npos);
}

TEST(Bench, ColdCacheReachesTheStoreOnEveryRequest)
{
    LatencySummary warm = bench_latency({.clients = 2, .requests_per_client = 20, .warm = true});
    LatencySummary cold = bench_latency({.clients = 2, .requests_per_client = 20, .warm = false});
    EXPECT_EQ(warm.store_lookups, 2u);     // one per client, then cached
    EXPECT_EQ(cold.store_lookups, 2u * 21); // every request, warm-up included
    EXPECT_EQ(cold.cache_hits, 0u);
}
