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

#include "ecotune/sobol.h"

#include <algorithm>
#include <bit>
#include <cmath>

#include "ecotune/error.h"
#include "ecotune/number_format.h"

namespace ecotune {
namespace {

// new-joe-kuo-6.21201, dimensions 2..21: degree s, coefficient a, initial m.
struct DirectionEntry {
  std::uint32_t s;
  std::uint32_t a;
  std::array<std::uint32_t, 7> m;
};

constexpr std::array<DirectionEntry, kMaxSobolDimension - 1> kJoeKuo = {{
    {1, 0, {1}},
    {2, 1, {1, 3}},
    {3, 1, {1, 3, 1}},
    {3, 2, {1, 1, 1}},
    {4, 1, {1, 1, 3, 3}},
    {4, 4, {1, 3, 5, 13}},
    {5, 2, {1, 1, 5, 5, 17}},
    {5, 4, {1, 1, 5, 5, 5}},
    {5, 7, {1, 1, 7, 11, 19}},
    {5, 11, {1, 1, 5, 1, 1}},
    {5, 13, {1, 1, 1, 3, 11}},
    {5, 14, {1, 3, 5, 5, 31}},
    {6, 1, {1, 3, 3, 9, 7, 49}},
    {6, 13, {1, 1, 1, 15, 21, 21}},
    {6, 16, {1, 3, 1, 13, 27, 49}},
    {6, 19, {1, 1, 1, 15, 7, 5}},
    {6, 22, {1, 3, 1, 15, 13, 25}},
    {6, 25, {1, 1, 5, 5, 19, 61}},
    {7, 1, {1, 3, 7, 11, 23, 15, 103}},
    {7, 4, {1, 3, 7, 13, 13, 15, 69}},
}};

constexpr double kScale = 1.0 / 4294967296.0;  // 2^-32

}  // namespace

SobolSequence::SobolSequence(int dimensions) : dimensions_(dimensions) {
  if (dimensions < 1 || dimensions > kMaxSobolDimension) {
    throw Error(ErrorCode::kUnsupportedDimension,
                "Sobol dimension " + std::to_string(dimensions) + " outside [1, " +
                    std::to_string(kMaxSobolDimension) + "]");
  }
  directions_.resize(static_cast<std::size_t>(dimensions));
  for (int i = 0; i < kSobolBits; ++i) {
    directions_[0][i] = 1u << (kSobolBits - 1 - i);
  }
  for (int dim = 1; dim < dimensions; ++dim) {
    const DirectionEntry& e = kJoeKuo[static_cast<std::size_t>(dim - 1)];
    auto& v = directions_[static_cast<std::size_t>(dim)];
    const int s = static_cast<int>(e.s);
    for (int i = 0; i < std::min(s, kSobolBits); ++i) {
      v[i] = e.m[i] << (kSobolBits - 1 - i);
    }
    for (int i = s; i < kSobolBits; ++i) {
      std::uint32_t value = v[i - s] ^ (v[i - s] >> s);
      for (int k = 1; k < s; ++k) {
        if ((e.a >> (s - 1 - k)) & 1u) value ^= v[i - k];
      }
      v[i] = value;
    }
  }
  state_.assign(static_cast<std::size_t>(dimensions), 0u);
}

void SobolSequence::Seek(std::uint64_t index) {
  Require(index < (std::uint64_t{1} << kSobolBits), "Sobol index exceeds 2^32");
  const std::uint64_t gray = index ^ (index >> 1);
  for (int dim = 0; dim < dimensions_; ++dim) {
    std::uint32_t x = 0;
    for (int bit = 0; bit < kSobolBits; ++bit) {
      if ((gray >> bit) & 1u) x ^= directions_[static_cast<std::size_t>(dim)][bit];
    }
    state_[static_cast<std::size_t>(dim)] = x;
  }
  index_ = index;
}

void SobolSequence::Next(std::span<double> out) {
  Require(out.size() == static_cast<std::size_t>(dimensions_), "Sobol output size mismatch");
  Require(index_ < (std::uint64_t{1} << kSobolBits), "Sobol sequence exhausted");
  for (int dim = 0; dim < dimensions_; ++dim) {
    out[static_cast<std::size_t>(dim)] = state_[static_cast<std::size_t>(dim)] * kScale;
  }
  // Gray-code step: flip the direction of the lowest zero bit of the index.
  const int c = std::countr_one(index_);
  if (c < kSobolBits) {
    for (int dim = 0; dim < dimensions_; ++dim) {
      state_[static_cast<std::size_t>(dim)] ^= directions_[static_cast<std::size_t>(dim)][c];
    }
  }
  ++index_;
}

std::vector<std::vector<double>> SobolPoints(int dimensions, std::size_t n,
                                             std::uint64_t skip) {
  Require(skip >= 1, "Sobol skip must be >= 1");
  SobolSequence seq(dimensions);
  std::vector<std::vector<double>> points;
  points.reserve(n);
  if (n == 0) return points;
  seq.Seek(skip);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> p(static_cast<std::size_t>(dimensions));
    seq.Next(p);
    points.push_back(std::move(p));
  }
  return points;
}

Configuration MapPoint(std::span<const double> point, const ParamSpace& space) {
  Require(point.size() == space.dimension(),
          "point has " + std::to_string(point.size()) + " coordinates, space has " +
              std::to_string(space.dimension()) + " domains");
  Configuration config(space.space_id());
  for (std::size_t i = 0; i < point.size(); ++i) {
    const double u = point[i];
    Require(u >= 0.0 && u < 1.0, "unit-cube coordinate outside [0, 1)");
    const ParamDomain& d = space.domains()[i];
    switch (d.kind) {
      case DomainKind::kIntegerRange: {
        const auto lo = static_cast<std::int64_t>(d.lo);
        const auto hi = static_cast<std::int64_t>(d.hi);
        auto k = static_cast<std::int64_t>(std::floor(u * static_cast<double>(hi - lo + 1)));
        config.Set(d.name, std::min(lo + k, hi));
        break;
      }
      case DomainKind::kRealRange: {
        if (d.step) {
          const std::int64_t last = *d.Cardinality() - 1;
          auto k = static_cast<std::int64_t>(std::floor(u * static_cast<double>(last + 1)));
          k = std::min(k, last);
          config.Set(d.name, SnapDecimal(d.lo + *d.step * static_cast<double>(k)));
        } else {
          config.Set(d.name, std::min(d.lo + u * (d.hi - d.lo), d.hi));
        }
        break;
      }
      case DomainKind::kCategorical: {
        auto k = static_cast<std::size_t>(std::floor(u * static_cast<double>(d.choices.size())));
        config.Set(d.name, d.choices[std::min(k, d.choices.size() - 1)]);
        break;
      }
    }
  }
  return config;
}

SobolPlan MakeSobolPlan(const ParamSpace& space, std::size_t n, std::uint64_t skip) {
  Require(n >= 1, "Sobol plan needs n >= 1");
  SobolPlan plan;
  plan.space_id = space.space_id();
  plan.n = n;
  plan.skip = skip;
  plan.points = SobolPoints(static_cast<int>(space.dimension()), n, skip);
  plan.configs.reserve(n);
  for (const auto& p : plan.points) plan.configs.push_back(MapPoint(p, space));
  return plan;
}

std::string SobolPlanCsv(const SobolPlan& plan, const ParamSpace& space) {
  std::string out = "index";
  for (const auto& d : space.domains()) out += "," + d.name;
  out += "\n";
  for (std::size_t i = 0; i < plan.configs.size(); ++i) {
    out += std::to_string(i + 1);
    for (const auto& d : space.domains()) {
      out += "," + ParamValueText(plan.configs[i].Get(d.name));
    }
    out += "\n";
  }
  return out;
}

}  // namespace ecotune
