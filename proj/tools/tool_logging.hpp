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

#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

namespace ipgate::tools {

/// Diagnostics go to stderr so stdout stays free for protocol output.
inline void log_to_stderr(spdlog::level::level_enum level = spdlog::level::info)
{
    auto logger = spdlog::stderr_logger_mt("ipgate");
    logger->set_level(level);
    spdlog::set_default_logger(logger);
}

} // namespace ipgate::tools
