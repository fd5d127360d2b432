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

#ifndef ECOTUNE_REPORT_H_
#define ECOTUNE_REPORT_H_

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ecotune/analysis.h"
#include "ecotune/metrics_store.h"

namespace ecotune {

struct AnalysisOptions {
  double threshold = 1.80;                // J/token
  std::optional<double> threshold_image;  // J/image
  int max_iterations = 6;
};

struct SessionAnalysis {
  std::string session_id;
  std::string strategy;
  std::string space_id;
  int trials = 0;
  int ok_trials = 0;
  ConvergenceSeries energy_per_token;  // ok trials only, iteration order
  ThresholdResult threshold;
  std::optional<ConvergenceSeries> energy_per_image;
  std::optional<ThresholdResult> image_threshold;
  RunRecord best;  // argmin energy_per_token, earliest iteration on ties
};

// kEmptySession when no record has status ok.
SessionAnalysis AnalyzeSession(const std::vector<RunRecord>& records,
                               const AnalysisOptions& options);

nlohmann::json ThresholdToJson(const ThresholdResult& r);
nlohmann::json StatReportToJson(const StatReport& r);
nlohmann::json BreakEvenToJson(const BreakEvenReport& r);
nlohmann::json SessionAnalysisToJson(const SessionAnalysis& a, const SpaceRegistry& spaces);

// Paired comparison of iterations-to-threshold between two equally long
// lists of sessions (pairs by position).
StatReport CompareIterations(const std::vector<SessionAnalysis>& a,
                             const std::vector<SessionAnalysis>& b);

struct ScatterRow {
  std::string id;  // "<session>#<iteration>"
  std::string session_id;
  std::int64_t iteration = 0;
  double throughput = 0;
  double energy_per_token = 0;
  bool on_front = false;
};

struct MultiSessionReport {
  std::vector<SessionAnalysis> sessions;
  std::map<std::string, std::vector<BandPoint>> bands;  // by strategy
  std::vector<ScatterRow> scatter;
  std::optional<StatReport> comparison;
};

MultiSessionReport BuildReport(const std::vector<std::vector<RunRecord>>& sessions,
                               const AnalysisOptions& options);
nlohmann::json ReportToJson(const MultiSessionReport& report, const SpaceRegistry& spaces);
std::string BandCsv(const std::vector<BandPoint>& band);      // iteration,mean,sd
std::string ScatterCsv(const std::vector<ScatterRow>& rows);  // ...,pareto

}  // namespace ecotune

#endif  // ECOTUNE_REPORT_H_
