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

#ifndef ECOTUNE_CLOCK_H_
#define ECOTUNE_CLOCK_H_

#include <cstdint>
#include <mutex>
#include <string>

namespace ecotune {

// Source of ISO-8601 UTC timestamps ("2026-01-01T00:00:00Z").
class Clock {
 public:
  virtual ~Clock() = default;
  virtual std::string NowIso8601() = 0;
};

class SystemClock final : public Clock {
 public:
  std::string NowIso8601() override;
};

// Deterministic clock: every call advances by a fixed number of seconds.
// Used for reproducible transcripts.
class LogicalClock final : public Clock {
 public:
  explicit LogicalClock(std::int64_t start_epoch_s = 1767225600,
                        std::int64_t step_s = 1)
      : next_(start_epoch_s), step_(step_s) {}
  std::string NowIso8601() override;

 private:
  std::mutex mu_;
  std::int64_t next_;
  std::int64_t step_;
};

std::string FormatIso8601(std::int64_t epoch_seconds);

}  // namespace ecotune

#endif  // ECOTUNE_CLOCK_H_
