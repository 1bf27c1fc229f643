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


// The gateway daemon: intercepting proxy and sign-in service in one process.

#include "ipgate/acl.hpp"
#include "ipgate/auth_service.hpp"
#include "ipgate/clock.hpp"
#include "ipgate/config.hpp"
#include "ipgate/credentials.hpp"
#include "ipgate/ldap.hpp"
#include "ipgate/proxy.hpp"
#include "ipgate/session_store.hpp"

#include "tool_logging.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>

#include <csignal>
#include <fstream>
#include <iostream>

#include <pthread.h>

using namespace ipgate;

namespace {

std::unique_ptr<CredentialBackend> make_backend(const AuthConfig& auth)
{
    if (auth.backend == CredentialBackendKind::Ldap)
        return std::make_unique<LdapBackend>(auth.ldap);
    return std::make_unique<FlatFileBackend>(FlatFileBackend::load(auth.credentials_file));
}

int wait_for_signal()
{
    sigset_t set;
    sigemptyset(&set);
    sigaddset(&set, SIGINT);
    sigaddset(&set, SIGTERM);
    int sig = 0;
    sigwait(&set, &sig);
    return sig;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"ipgate: intercepting HTTP proxy with IP-based sign-in"};
    std::string config_path = "/etc/ipgate/ipgate.conf";
    bool check_only = false;
    bool verbose = false;
    app.add_option("-c,--config", config_path, "Configuration file")->capture_default_str();
    app.add_flag("--check", check_only, "Validate the configuration and credentials, then exit");
    app.add_flag("-v,--verbose", verbose, "Debug logging");
    CLI11_PARSE(app, argc, argv);

    tools::log_to_stderr(verbose ? spdlog::level::debug : spdlog::level::info);

    Config config;
    std::unique_ptr<CredentialBackend> backend;
    try {
        config = load_config(config_path);
        backend = make_backend(config.auth);
    } catch (const std::exception& e) {
        fmt::print(stderr, "ipgate: {}\n", e.what());
        return 1;
    }
    if (check_only) {
        fmt::print("{}: ok ({} mode, {} listed domains)\n", config_path, to_string(config.policy.mode),
                   config.policy.domain_list.size());
        return 0;
    }

    // Signals are taken synchronously by the main thread; block them before
    // any worker thread starts so the workers inherit the mask.
    sigset_t set;
    sigemptyset(&set);
    sigaddset(&set, SIGINT);
    sigaddset(&set, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &set, nullptr);
    std::signal(SIGPIPE, SIG_IGN);

    try {
        std::unique_ptr<SessionStore> store =
            open_session_store(config.store_locator, StoreOptions{config.session_defaults.inactivity});
        AclEngine engine(config.policy, *store);
        SystemClock clock;

        std::ofstream log_file;
        std::ostream* log_stream = &std::cout;
        if (config.access_log != "-") {
            log_file.open(config.access_log, std::ios::app);
            if (!log_file)
                throw std::runtime_error(fmt::format("cannot open access log {}", config.access_log));
            log_stream = &log_file;
        }
        AccessLog access_log(log_stream);
        DnsResolver resolver;

        AuthService auth(*backend, *store, config.session_defaults);
        auth.set_login_listener([&engine](Ipv4Address ip) { engine.forget(ip); });
        AuthServerOptions auth_options;
        auth_options.listen_address = config.auth.listen_address;
        auth_options.listen_port = config.auth.listen_port;
        auth_options.proxy_protocol = config.auth.proxy_protocol;
        auth_options.duration_options = config.auth.duration_options;
        auth_options.portal_dir = config.auth.portal_dir;
        AuthServer auth_server(auth_options, auth, clock);

        ProxyOptions proxy_options;
        proxy_options.listen_address = config.listen_address;
        proxy_options.listen_port = config.listen_port;
        proxy_options.login_url = config.login_url;
        proxy_options.upstream_timeout = config.upstream_connect_timeout;
        proxy_options.proxy_protocol = config.proxy_protocol;
        ProxyServer proxy(proxy_options, engine, clock, resolver, access_log);

        auth_server.start();
        proxy.start();
        spdlog::info("proxy on {}:{}, sign-in on {}:{}, {} mode", config.listen_address, proxy.port(),
                     config.auth.listen_address, auth_server.port(), to_string(config.policy.mode));

        int sig = wait_for_signal();
        spdlog::info("signal {}, shutting down", sig);
        proxy.stop();
        auth_server.stop();
    } catch (const std::exception& e) {
        spdlog::critical("{}", e.what());
        return 1;
    }
    return 0;
}
