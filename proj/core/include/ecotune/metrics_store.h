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

#ifndef ECOTUNE_METRICS_STORE_H_
#define ECOTUNE_METRICS_STORE_H_

#include <cstdint>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "ecotune/backends.h"
#include "ecotune/metrics_summary.h"
#include "ecotune/param_space.h"

namespace ecotune {

enum class RecordStrategy { kEnhanced, kBaseline, kSobol, kManual };

std::string_view RecordStrategyText(RecordStrategy s);
RecordStrategy ParseRecordStrategy(std::string_view text);

struct RunRecord {
  std::string session_id;
  RecordStrategy strategy = RecordStrategy::kManual;
  std::int64_t iteration = 0;  // 1-based ordinal of the trial within the session
  std::string space_id;
  Configuration config;
  TrialStatus status = TrialStatus::kOk;
  double total_energy_j = 0;
  double wall_time_s = 0;
  std::int64_t total_tokens = 0;
  std::optional<std::int64_t> total_images;
  double energy_per_token = 0;
  std::optional<double> energy_per_image;
  double throughput = 0;
  std::string timestamp;  // ISO-8601 UTC

  bool ok() const { return status == TrialStatus::kOk; }
  MetricsSummary metrics() const;

  friend bool operator==(const RunRecord&, const RunRecord&) = default;
};

// Builds the persisted row for a trial; failed trials carry zero metrics.
RunRecord MakeRunRecord(std::string session_id, RecordStrategy strategy, std::int64_t iteration,
                        const TrialResult& trial, std::string timestamp);

inline constexpr std::string_view kRecordsVersionLine = "# ecotune-records v1";
inline constexpr std::string_view kRecordsHeader =
    "session_id,strategy,iteration,space_id,config,status,total_energy_j,wall_time_s,"
    "total_tokens,total_images,energy_per_token,energy_per_image,throughput,timestamp";

std::string FormatRecordRow(const RunRecord& record, const ParamSpace& space);
RunRecord ParseRecordRow(std::string_view line, const SpaceRegistry& spaces);

// RFC 4180 field quoting helpers.
std::string CsvField(std::string_view value);
std::vector<std::string> SplitCsvLine(std::string_view line);

struct SessionIndexEntry {
  std::string session_id;
  std::string strategy;
  std::string space_id;
  std::string created;
};

// One CSV per session under <dir>/records plus <dir>/index.csv. Appends are
// flushed before returning; rows are never rewritten.
class MetricsStore {
 public:
  MetricsStore(std::filesystem::path dir, const SpaceRegistry& spaces);

  const std::filesystem::path& dir() const { return dir_; }
  std::filesystem::path SessionPath(std::string_view session_id) const;

  // kConflict for a duplicate (session_id, iteration), kContractViolation for
  // a record whose metrics break their invariants, kStorage on I/O failure.
  void Append(const RunRecord& record);

  // Rows in iteration order; empty for an unknown session. kParse names the
  // offending line number.
  std::vector<RunRecord> LoadSession(std::string_view session_id) const;

  // Raw file bytes (version line, header, rows); empty for unknown sessions.
  std::string SessionCsv(std::string_view session_id) const;

  void RegisterSession(const SessionIndexEntry& entry);
  std::vector<SessionIndexEntry> ListSessions() const;

 private:
  void Validate(const RunRecord& record) const;

  std::filesystem::path dir_;
  const SpaceRegistry& spaces_;
  mutable std::mutex mu_;
  mutable std::map<std::string, std::set<std::int64_t>, std::less<>> seen_;
};

}  // namespace ecotune

#endif  // ECOTUNE_METRICS_STORE_H_
