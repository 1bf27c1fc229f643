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

#include <atomic>
#include <chrono>
#include <string>

namespace ipgate {

using Seconds = std::chrono::seconds;
using TimePoint = std::chrono::sys_seconds;

class Clock {
public:
    virtual ~Clock() = default;
    virtual TimePoint now() const = 0;
};

class SystemClock final : public Clock {
public:
    TimePoint now() const override
    {
        return std::chrono::time_point_cast<Seconds>(std::chrono::system_clock::now());
    }
};

/// Clock that only moves when told to. Safe to read from other threads.
class ManualClock final : public Clock {
public:
    explicit ManualClock(TimePoint start = TimePoint{Seconds{1'700'000'000}})
        : ticks_(start.time_since_epoch().count())
    {
    }

    TimePoint now() const override { return TimePoint{Seconds{ticks_.load()}}; }
    void set(TimePoint t) { ticks_.store(t.time_since_epoch().count()); }
    void advance(Seconds d) { ticks_.fetch_add(d.count()); }

private:
    std::atomic<Seconds::rep> ticks_;
};

/// "2026-10-19T08:30:00Z"
std::string format_utc(TimePoint t);

} // namespace ipgate
