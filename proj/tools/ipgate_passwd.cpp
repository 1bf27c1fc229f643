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


// Prints a credentials-file line for a user. The password is read from
// stdin so it stays out of the process list and shell history.

#include "ipgate/credentials.hpp"
#include "ipgate/session_store.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>

#include <iostream>

int main(int argc, char** argv)
{
    CLI::App app{"Hash a password for the ipgate credentials file"};
    std::string user, groups = "internet";
    unsigned iterations = 100000;
    app.add_option("user", user)->required();
    app.add_option("--groups", groups, "Comma-separated groups")->capture_default_str();
    app.add_option("--iterations", iterations, "PBKDF2 iterations")->capture_default_str()->check(
        CLI::Range(1u, 10'000'000u));
    CLI11_PARSE(app, argc, argv);

    if (!ipgate::is_valid_identifier(user)) {
        fmt::print(stderr, "invalid user name '{}'\n", user);
        return 1;
    }
    std::string password;
    if (!std::getline(std::cin, password) || password.empty()) {
        fmt::print(stderr, "expected the password on stdin\n");
        return 1;
    }
    fmt::print("{}:{}:{}\n", user, ipgate::hash_password(password, iterations), groups);
    return 0;
}
