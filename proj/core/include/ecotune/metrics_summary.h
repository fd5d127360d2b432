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

#ifndef ECOTUNE_METRICS_SUMMARY_H_
#define ECOTUNE_METRICS_SUMMARY_H_

#include <cstdint>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

namespace ecotune {

struct MetricsSummary {
  double total_energy_j = 0;
  double wall_time_s = 0;
  std::int64_t total_tokens = 0;
  double energy_per_token = 0;  // J/token
  double throughput = 0;        // tokens/s
  std::optional<double> energy_per_image;
  std::optional<std::int64_t> total_images;

  friend bool operator==(const MetricsSummary&, const MetricsSummary&) = default;
};

// energy_per_token = E/tokens, throughput = tokens/wall, energy_per_image =
// E/images. Contract violation for negative energy, wall <= 0, tokens < 1 or
// images < 1.
MetricsSummary DeriveMetrics(double total_energy_j, double wall_time_s,
                             std::int64_t total_tokens,
                             std::optional<std::int64_t> total_images = std::nullopt);

// Relative-1e-9 check of the arithmetic identities between the fields.
bool MetricsConsistent(const MetricsSummary& m, double rel_tol = 1e-9);

nlohmann::json MetricsToJson(const MetricsSummary& m);
MetricsSummary MetricsFromJson(const nlohmann::json& doc);

}  // namespace ecotune

#endif  // ECOTUNE_METRICS_SUMMARY_H_
