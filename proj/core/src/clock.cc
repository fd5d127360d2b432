// Copyright 2026 The EcoTune Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "ecotune/clock.h"

#include <chrono>
#include <cstdio>
#include <ctime>

namespace ecotune {

std::string FormatIso8601(std::int64_t epoch_seconds) {
  std::time_t t = static_cast<std::time_t>(epoch_seconds);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%04d-%02d-%02dT%02d:%02d:%02dZ",
                tm.tm_year + 1900, tm.tm_mon + 1, tm.tm_mday, tm.tm_hour,
                tm.tm_min, tm.tm_sec);
  return buf;
}

std::string SystemClock::NowIso8601() {
  auto now = std::chrono::system_clock::now();
  return FormatIso8601(
      std::chrono::duration_cast<std::chrono::seconds>(now.time_since_epoch())
          .count());
}

std::string LogicalClock::NowIso8601() {
  std::lock_guard<std::mutex> lock(mu_);
  std::string out = FormatIso8601(next_);
  next_ += step_;
  return out;
}

}  // namespace ecotune
