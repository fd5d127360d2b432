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

#ifndef ECOTUNE_ERROR_H_
#define ECOTUNE_ERROR_H_

#include <stdexcept>
#include <string>
#include <string_view>

namespace ecotune {

enum class ErrorCode {
  kNotFound,
  kContractViolation,
  kUnsupportedDimension,
  kConflict,
  kBusy,
  kGateway,
  kValidation,
  kStorage,
  kParse,
  kDegenerateVariance,
  kUndefinedBreakEven,
  kProtocol,
  kEmptySession,
  kStartup,
};

std::string_view ErrorCodeName(ErrorCode code);

// Single exception type for the library. Data-shaped failures (validation
// reports, trial statuses, parse errors inside proposals) are never thrown.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message, bool retryable = false)
      : std::runtime_error(message), code_(code), retryable_(retryable) {}

  ErrorCode code() const { return code_; }
  bool retryable() const { return retryable_; }

 private:
  ErrorCode code_;
  bool retryable_;
};

[[noreturn]] inline void Fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

inline void Require(bool condition, const std::string& message) {
  if (!condition) throw Error(ErrorCode::kContractViolation, message);
}

}  // namespace ecotune

#endif  // ECOTUNE_ERROR_H_
