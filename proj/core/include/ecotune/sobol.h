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

#ifndef ECOTUNE_SOBOL_H_
#define ECOTUNE_SOBOL_H_

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "ecotune/param_space.h"

namespace ecotune {

inline constexpr int kMaxSobolDimension = 21;
inline constexpr int kSobolBits = 32;

// Unscrambled Sobol sequence in Gray-code order with Joe-Kuo (new-joe-kuo-6)
// direction numbers. Point 0 is the origin; callers normally skip it.
class SobolSequence {
 public:
  explicit SobolSequence(int dimensions);  // kUnsupportedDimension outside [1, 21]

  int dimensions() const { return dimensions_; }
  std::uint64_t index() const { return index_; }  // index of the next point

  // Jumps directly to point `index` (any index < 2^32).
  void Seek(std::uint64_t index);
  // Writes the next point into `out` (size == dimensions).
  void Next(std::span<double> out);
  // Integer state of the next point, before scaling by 2^-32.
  std::span<const std::uint32_t> raw() const { return state_; }

  // Direction number v_j (j < 32) for one dimension, scaled to 32 bits.
  std::uint32_t Direction(int dimension, int bit) const {
    return directions_[static_cast<std::size_t>(dimension)][static_cast<std::size_t>(bit)];
  }

 private:
  int dimensions_;
  std::uint64_t index_ = 0;
  std::vector<std::array<std::uint32_t, kSobolBits>> directions_;
  std::vector<std::uint32_t> state_;
};

// Points skip..skip+n-1 of the sequence.
std::vector<std::vector<double>> SobolPoints(int dimensions, std::size_t n,
                                             std::uint64_t skip = 1);

// Linear bucket mapping of a unit-cube point onto the space, dimension i to
// domain i in declared order.
Configuration MapPoint(std::span<const double> point, const ParamSpace& space);

struct SobolPlan {
  std::string space_id;
  std::size_t n = 0;
  std::uint64_t skip = 1;
  std::vector<std::vector<double>> points;
  std::vector<Configuration> configs;
};

SobolPlan MakeSobolPlan(const ParamSpace& space, std::size_t n, std::uint64_t skip = 1);

// "index,<domain names...>" header plus one row per configuration; index is
// 1-based.
std::string SobolPlanCsv(const SobolPlan& plan, const ParamSpace& space);

}  // namespace ecotune

#endif  // ECOTUNE_SOBOL_H_
