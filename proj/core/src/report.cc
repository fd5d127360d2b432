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

#include "ecotune/report.h"

#include "ecotune/error.h"
#include "ecotune/number_format.h"

namespace ecotune {

using nlohmann::json;

SessionAnalysis AnalyzeSession(const std::vector<RunRecord>& records,
                               const AnalysisOptions& options) {
  SessionAnalysis a;
  std::vector<double> ept;
  std::vector<double> epi;
  const RunRecord* best = nullptr;
  for (const auto& r : records) {
    if (a.session_id.empty()) {
      a.session_id = r.session_id;
      a.strategy = std::string(RecordStrategyText(r.strategy));
      a.space_id = r.space_id;
    }
    ++a.trials;
    if (!r.ok()) continue;
    ++a.ok_trials;
    ept.push_back(r.energy_per_token);
    if (r.energy_per_image) epi.push_back(*r.energy_per_image);
    if (!best || r.energy_per_token < best->energy_per_token) best = &r;
  }
  if (!best) throw Error(ErrorCode::kEmptySession, "session has no ok trials");
  a.best = *best;
  a.energy_per_token = CumulativeMin(ept);
  a.threshold = IterationsToThreshold(a.energy_per_token, options.threshold, options.max_iterations);
  if (!epi.empty() && epi.size() == ept.size()) {
    a.energy_per_image = CumulativeMin(epi);
    if (options.threshold_image) {
      a.image_threshold =
          IterationsToThreshold(*a.energy_per_image, *options.threshold_image, options.max_iterations);
    }
  }
  return a;
}

json ThresholdToJson(const ThresholdResult& r) {
  return {{"iterations", r.iterations},
          {"censored", r.censored},
          {"threshold", r.threshold},
          {"max_iterations", r.max_iterations}};
}

json StatReportToJson(const StatReport& r) {
  return {{"t", r.t},          {"df", r.df},         {"p_two_tailed", r.p_two_tailed},
          {"d_pooled", r.d_pooled}, {"d_z", r.d_z}, {"mean_a", r.mean_a},
          {"sd_a", r.sd_a},    {"mean_b", r.mean_b}, {"sd_b", r.sd_b}};
}

json BreakEvenToJson(const BreakEvenReport& r) {
  return {{"prompt_count", r.prompt_count},
          {"wh_per_prompt", r.wh_per_prompt},
          {"prompt_energy_j", r.prompt_energy_j},
          {"trial_energy_j", r.trial_energy_j},
          {"total_overhead_j", r.total_overhead_j},
          {"savings_per_workload_j", r.savings_per_workload_j},
          {"break_even_workloads", r.break_even_workloads}};
}

json SessionAnalysisToJson(const SessionAnalysis& a, const SpaceRegistry& spaces) {
  json j = {{"session_id", a.session_id},
            {"strategy", a.strategy},
            {"space_id", a.space_id},
            {"trials", a.trials},
            {"ok_trials", a.ok_trials},
            {"energy_per_token", a.energy_per_token.values},
            {"cumulative_min", a.energy_per_token.cumulative_min},
            {"iterations_to_threshold", ThresholdToJson(a.threshold)}};
  if (a.energy_per_image) {
    j["energy_per_image"] = a.energy_per_image->values;
    j["cumulative_min_image"] = a.energy_per_image->cumulative_min;
  }
  if (a.image_threshold) j["iterations_to_image_threshold"] = ThresholdToJson(*a.image_threshold);
  const ParamSpace* space = spaces.Find(a.best.space_id);
  j["best"] = {{"iteration", a.best.iteration},
               {"config", space ? CanonicalText(a.best.config, *space) : ""},
               {"energy_per_token", a.best.energy_per_token},
               {"throughput", a.best.throughput}};
  if (a.best.energy_per_image) j["best"]["energy_per_image"] = *a.best.energy_per_image;
  return j;
}

StatReport CompareIterations(const std::vector<SessionAnalysis>& a,
                             const std::vector<SessionAnalysis>& b) {
  Require(a.size() == b.size(), "comparison lists must have equal length");
  std::vector<double> xs;
  std::vector<double> ys;
  for (std::size_t i = 0; i < a.size(); ++i) {
    xs.push_back(a[i].threshold.iterations);
    ys.push_back(b[i].threshold.iterations);
  }
  return PairedTTest(xs, ys);
}

MultiSessionReport BuildReport(const std::vector<std::vector<RunRecord>>& sessions,
                               const AnalysisOptions& options) {
  MultiSessionReport report;
  std::map<std::string, std::vector<ConvergenceSeries>> by_strategy;
  std::vector<ParetoPoint> points;
  for (const auto& records : sessions) {
    SessionAnalysis a = AnalyzeSession(records, options);
    const std::size_t length =
        std::max(a.energy_per_token.cumulative_min.size(),
                 static_cast<std::size_t>(options.max_iterations));
    ConvergenceSeries padded = PadSeries(a.energy_per_token, length);
    padded.values.resize(static_cast<std::size_t>(options.max_iterations));
    padded.cumulative_min.resize(static_cast<std::size_t>(options.max_iterations));
    by_strategy[a.strategy].push_back(std::move(padded));
    for (const auto& r : records) {
      if (!r.ok()) continue;
      ScatterRow row;
      row.session_id = r.session_id;
      row.iteration = r.iteration;
      row.id = r.session_id + "#" + std::to_string(r.iteration);
      row.throughput = r.throughput;
      row.energy_per_token = r.energy_per_token;
      report.scatter.push_back(row);
      points.push_back({row.id, row.throughput, row.energy_per_token});
    }
    report.sessions.push_back(std::move(a));
  }
  for (auto& [strategy, runs] : by_strategy) report.bands[strategy] = BandSeries(runs);
  const auto front = ParetoFront(points);
  std::set<std::string> front_ids(front.begin(), front.end());
  for (auto& row : report.scatter) row.on_front = front_ids.count(row.id) > 0;
  return report;
}

json ReportToJson(const MultiSessionReport& report, const SpaceRegistry& spaces) {
  json sessions = json::array();
  for (const auto& s : report.sessions) sessions.push_back(SessionAnalysisToJson(s, spaces));
  json bands = json::object();
  for (const auto& [strategy, band] : report.bands) {
    json rows = json::array();
    for (const auto& p : band) rows.push_back({{"iteration", p.iteration}, {"mean", p.mean}, {"sd", p.sd}});
    bands[strategy] = std::move(rows);
  }
  json front = json::array();
  for (const auto& row : report.scatter) {
    if (row.on_front) front.push_back(row.id);
  }
  json j = {{"sessions", std::move(sessions)}, {"bands", std::move(bands)},
            {"pareto_front", std::move(front)}};
  if (report.comparison) j["comparison"] = StatReportToJson(*report.comparison);
  return j;
}

std::string BandCsv(const std::vector<BandPoint>& band) {
  std::string out = "iteration,mean,sd\n";
  for (const auto& p : band) {
    out += std::to_string(p.iteration) + "," + ShortestDecimal(p.mean) + "," +
           ShortestDecimal(p.sd) + "\n";
  }
  return out;
}

std::string ScatterCsv(const std::vector<ScatterRow>& rows) {
  std::string out = "session_id,iteration,throughput,energy_per_token,pareto\n";
  for (const auto& r : rows) {
    out += CsvField(r.session_id) + "," + std::to_string(r.iteration) + "," +
           ShortestDecimal(r.throughput) + "," + ShortestDecimal(r.energy_per_token) + "," +
           (r.on_front ? "1" : "0") + "\n";
  }
  return out;
}

}  // namespace ecotune
