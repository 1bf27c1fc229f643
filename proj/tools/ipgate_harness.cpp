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


// Runs topology scenarios and the latency bench against an in-process
// testbed.

#include "ipgate/harness.hpp"

#include "tool_logging.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>

#include <fstream>
#include <iostream>

using namespace ipgate;
using namespace ipgate::harness;

int main(int argc, char** argv)
{
    CLI::App app{"ipgate testbed: topology scenarios and latency bench"};
    app.require_subcommand(1);

    std::string script;
    bool bodies = false;
    auto* scenario = app.add_subcommand("scenario", "Run a scenario script and print its transcript");
    scenario->add_option("script", script, "Scenario file")->required()->check(CLI::ExistingFile);
    scenario->add_flag("--bodies", bodies, "Print response bodies under each line");

    BenchOptions bench_options;
    bool cold = false;
    auto* bench = app.add_subcommand("bench", "Measure latency added by the proxy");
    bench->add_option("--clients", bench_options.clients, "Concurrent clients")->capture_default_str()->check(
        CLI::PositiveNumber);
    bench->add_option("--requests", bench_options.requests_per_client, "Requests per client")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    bench->add_option("--path", bench_options.path, "Origin path to fetch")->capture_default_str();
    bench->add_flag("--cold", cold, "Disable the decision cache");

    CLI11_PARSE(app, argc, argv);
    tools::log_to_stderr(spdlog::level::warn);

    try {
        if (*scenario) {
            std::ifstream in(script);
            Scenario sc = parse_scenario(in);
            fmt::print("# topology {} with {} clients\n", to_string(sc.topology.kind), sc.topology.clients.size());
            for (const TranscriptEntry& e : run_scenario(sc)) {
                fmt::print("{}\n", format_transcript_line(e));
                if (bodies && !e.body.empty())
                    fmt::print("{}\n", e.body);
            }
        } else {
            bench_options.warm = !cold;
            fmt::print("{}", format_summary(bench_latency(bench_options)));
        }
    } catch (const ScenarioError& e) {
        fmt::print(stderr, "{}: {}\n", script, e.what());
        return 1;
    } catch (const std::exception& e) {
        fmt::print(stderr, "ipgate-harness: {}\n", e.what());
        return 1;
    }
    return 0;
}
