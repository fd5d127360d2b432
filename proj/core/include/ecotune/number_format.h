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

#ifndef ECOTUNE_NUMBER_FORMAT_H_
#define ECOTUNE_NUMBER_FORMAT_H_

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace ecotune {

// Shortest decimal text that parses back to exactly `value`.
std::string ShortestDecimal(double value);

// Fixed significant-digit rendering for human-facing text (prompts).
std::string SignificantDigits(double value, int digits = 6);

std::optional<double> ParseDouble(std::string_view text);
std::optional<std::int64_t> ParseInt(std::string_view text);

std::string_view Trim(std::string_view text);
std::string ToLower(std::string_view text);

}  // namespace ecotune

#endif  // ECOTUNE_NUMBER_FORMAT_H_
