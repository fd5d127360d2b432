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

#include "ecotune/metrics_summary.h"

#include <cmath>

#include "ecotune/error.h"

namespace ecotune {

MetricsSummary DeriveMetrics(double total_energy_j, double wall_time_s,
                             std::int64_t total_tokens,
                             std::optional<std::int64_t> total_images) {
  Require(std::isfinite(total_energy_j) && total_energy_j >= 0, "total energy must be >= 0");
  Require(std::isfinite(wall_time_s) && wall_time_s > 0, "wall time must be > 0");
  Require(total_tokens >= 1, "total tokens must be >= 1");
  MetricsSummary m;
  m.total_energy_j = total_energy_j;
  m.wall_time_s = wall_time_s;
  m.total_tokens = total_tokens;
  m.energy_per_token = total_energy_j / static_cast<double>(total_tokens);
  m.throughput = static_cast<double>(total_tokens) / wall_time_s;
  if (total_images) {
    Require(*total_images >= 1, "total images must be >= 1");
    m.total_images = total_images;
    m.energy_per_image = total_energy_j / static_cast<double>(*total_images);
  }
  return m;
}

namespace {
bool Close(double a, double b, double rel_tol) {
  return std::fabs(a - b) <= rel_tol * std::max(std::fabs(a), std::fabs(b)) ||
         (a == 0 && b == 0);
}
}  // namespace

bool MetricsConsistent(const MetricsSummary& m, double rel_tol) {
  const auto tokens = static_cast<double>(m.total_tokens);
  if (!Close(m.energy_per_token * tokens, m.total_energy_j, rel_tol)) return false;
  if (!Close(m.throughput * m.wall_time_s, tokens, rel_tol)) return false;
  if (m.energy_per_image.has_value() != m.total_images.has_value()) return false;
  if (m.energy_per_image &&
      !Close(*m.energy_per_image * static_cast<double>(*m.total_images), m.total_energy_j,
             rel_tol)) {
    return false;
  }
  return true;
}

nlohmann::json MetricsToJson(const MetricsSummary& m) {
  nlohmann::json j = {{"total_energy_j", m.total_energy_j},
                      {"wall_time_s", m.wall_time_s},
                      {"total_tokens", m.total_tokens},
                      {"energy_per_token", m.energy_per_token},
                      {"throughput", m.throughput}};
  if (m.total_images) j["total_images"] = *m.total_images;
  if (m.energy_per_image) j["energy_per_image"] = *m.energy_per_image;
  return j;
}

MetricsSummary MetricsFromJson(const nlohmann::json& doc) {
  MetricsSummary m;
  m.total_energy_j = doc.at("total_energy_j").get<double>();
  m.wall_time_s = doc.at("wall_time_s").get<double>();
  m.total_tokens = doc.at("total_tokens").get<std::int64_t>();
  m.energy_per_token = doc.at("energy_per_token").get<double>();
  m.throughput = doc.at("throughput").get<double>();
  if (doc.contains("total_images") && !doc["total_images"].is_null()) {
    m.total_images = doc["total_images"].get<std::int64_t>();
  }
  if (doc.contains("energy_per_image") && !doc["energy_per_image"].is_null()) {
    m.energy_per_image = doc["energy_per_image"].get<double>();
  }
  return m;
}

}  // namespace ecotune
