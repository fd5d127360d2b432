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

#include "ecotune/metrics_store.h"

#include <algorithm>
#include <fstream>
#include <regex>
#include <sstream>

#include "ecotune/error.h"
#include "ecotune/number_format.h"

namespace ecotune {

namespace fs = std::filesystem;

std::string_view RecordStrategyText(RecordStrategy s) {
  switch (s) {
    case RecordStrategy::kEnhanced: return "enhanced";
    case RecordStrategy::kBaseline: return "baseline";
    case RecordStrategy::kSobol: return "sobol";
    case RecordStrategy::kManual: return "manual";
  }
  return "unknown";
}

RecordStrategy ParseRecordStrategy(std::string_view text) {
  if (text == "enhanced") return RecordStrategy::kEnhanced;
  if (text == "baseline") return RecordStrategy::kBaseline;
  if (text == "sobol") return RecordStrategy::kSobol;
  if (text == "manual") return RecordStrategy::kManual;
  Fail(ErrorCode::kParse, "unknown strategy '" + std::string(text) + "'");
}

MetricsSummary RunRecord::metrics() const {
  MetricsSummary m;
  m.total_energy_j = total_energy_j;
  m.wall_time_s = wall_time_s;
  m.total_tokens = total_tokens;
  m.energy_per_token = energy_per_token;
  m.throughput = throughput;
  m.energy_per_image = energy_per_image;
  m.total_images = total_images;
  return m;
}

RunRecord MakeRunRecord(std::string session_id, RecordStrategy strategy, std::int64_t iteration,
                        const TrialResult& trial, std::string timestamp) {
  RunRecord r;
  r.session_id = std::move(session_id);
  r.strategy = strategy;
  r.iteration = iteration;
  r.space_id = trial.config.space_id();
  r.config = trial.config;
  r.status = trial.status;
  r.timestamp = std::move(timestamp);
  if (trial.metrics) {
    const MetricsSummary& m = *trial.metrics;
    r.total_energy_j = m.total_energy_j;
    r.wall_time_s = m.wall_time_s;
    r.total_tokens = m.total_tokens;
    r.total_images = m.total_images;
    r.energy_per_token = m.energy_per_token;
    r.energy_per_image = m.energy_per_image;
    r.throughput = m.throughput;
  }
  return r;
}

std::string CsvField(std::string_view value) {
  if (value.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(value);
  std::string out = "\"";
  for (char c : value) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::vector<std::string> SplitCsvLine(std::string_view line) {
  std::vector<std::string> fields;
  std::string current;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          current += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        current += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(current));
      current.clear();
    } else {
      current += c;
    }
  }
  if (quoted) Fail(ErrorCode::kParse, "unterminated quoted field");
  fields.push_back(std::move(current));
  return fields;
}

std::string FormatRecordRow(const RunRecord& r, const ParamSpace& space) {
  std::vector<std::string> f = {
      CsvField(r.session_id),
      std::string(RecordStrategyText(r.strategy)),
      std::to_string(r.iteration),
      CsvField(r.space_id),
      CsvField(CanonicalText(r.config, space)),
      std::string(TrialStatusText(r.status)),
      ShortestDecimal(r.total_energy_j),
      ShortestDecimal(r.wall_time_s),
      std::to_string(r.total_tokens),
      r.total_images ? std::to_string(*r.total_images) : "",
      ShortestDecimal(r.energy_per_token),
      r.energy_per_image ? ShortestDecimal(*r.energy_per_image) : "",
      ShortestDecimal(r.throughput),
      CsvField(r.timestamp),
  };
  std::string out;
  for (std::size_t i = 0; i < f.size(); ++i) {
    if (i) out += ',';
    out += f[i];
  }
  return out;
}

namespace {

double ReadReal(const std::string& text, const char* column) {
  auto v = ParseDouble(text);
  if (!v) Fail(ErrorCode::kParse, std::string("bad real in column ") + column + ": '" + text + "'");
  return *v;
}

std::int64_t ReadInt(const std::string& text, const char* column) {
  auto v = ParseInt(text);
  if (!v) Fail(ErrorCode::kParse, std::string("bad integer in column ") + column + ": '" + text + "'");
  return *v;
}

}  // namespace

RunRecord ParseRecordRow(std::string_view line, const SpaceRegistry& spaces) {
  std::vector<std::string> f = SplitCsvLine(line);
  if (f.size() != 14) {
    Fail(ErrorCode::kParse, "expected 14 columns, found " + std::to_string(f.size()));
  }
  RunRecord r;
  r.session_id = f[0];
  r.strategy = ParseRecordStrategy(f[1]);
  r.iteration = ReadInt(f[2], "iteration");
  r.space_id = f[3];
  r.config = ParseCanonicalText(f[4], spaces.Get(r.space_id));
  r.status = ParseTrialStatus(f[5]);
  r.total_energy_j = ReadReal(f[6], "total_energy_j");
  r.wall_time_s = ReadReal(f[7], "wall_time_s");
  r.total_tokens = ReadInt(f[8], "total_tokens");
  if (!f[9].empty()) r.total_images = ReadInt(f[9], "total_images");
  r.energy_per_token = ReadReal(f[10], "energy_per_token");
  if (!f[11].empty()) r.energy_per_image = ReadReal(f[11], "energy_per_image");
  r.throughput = ReadReal(f[12], "throughput");
  r.timestamp = f[13];
  return r;
}

MetricsStore::MetricsStore(fs::path dir, const SpaceRegistry& spaces)
    : dir_(std::move(dir)), spaces_(spaces) {
  std::error_code ec;
  fs::create_directories(dir_ / "records", ec);
  if (ec) Fail(ErrorCode::kStorage, "cannot create " + (dir_ / "records").string() + ": " + ec.message());
}

fs::path MetricsStore::SessionPath(std::string_view session_id) const {
  static const std::regex safe(R"([A-Za-z0-9._-]+)");
  std::string id(session_id);
  if (!std::regex_match(id, safe) || id == "." || id == "..") {
    Fail(ErrorCode::kContractViolation, "session id '" + id + "' is not a safe file name");
  }
  return dir_ / "records" / (id + ".csv");
}

void MetricsStore::Validate(const RunRecord& r) const {
  Require(r.iteration >= 1, "record iteration must be >= 1");
  Require(r.config.space_id() == r.space_id, "record config belongs to another space");
  const ParamSpace& space = spaces_.Get(r.space_id);
  Require(::ecotune::Validate(r.config, space).valid, "record config is invalid");
  if (r.ok()) Require(MetricsConsistent(r.metrics()), "record metrics violate their invariants");
}

void MetricsStore::Append(const RunRecord& record) {
  Validate(record);
  const ParamSpace& space = spaces_.Get(record.space_id);
  std::lock_guard<std::mutex> lock(mu_);
  const fs::path path = SessionPath(record.session_id);
  auto seen = seen_.find(record.session_id);
  if (seen == seen_.end()) {
    std::set<std::int64_t> iterations;
    for (const auto& r : LoadSession(record.session_id)) iterations.insert(r.iteration);
    seen = seen_.emplace(record.session_id, std::move(iterations)).first;
  }
  if (seen->second.count(record.iteration)) {
    throw Error(ErrorCode::kConflict, "session " + record.session_id + " already has iteration " +
                                          std::to_string(record.iteration));
  }
  const bool fresh = !fs::exists(path);
  std::ofstream out(path, std::ios::binary | std::ios::app);
  if (!out) Fail(ErrorCode::kStorage, "cannot open " + path.string());
  if (fresh) out << kRecordsVersionLine << '\n' << kRecordsHeader << '\n';
  out << FormatRecordRow(record, space) << '\n';
  out.flush();
  if (!out) Fail(ErrorCode::kStorage, "write failed for " + path.string());
  seen->second.insert(record.iteration);
}

std::vector<RunRecord> MetricsStore::LoadSession(std::string_view session_id) const {
  std::vector<RunRecord> records;
  const fs::path path = SessionPath(session_id);
  std::ifstream in(path, std::ios::binary);
  if (!in) return records;
  std::string line;
  std::size_t line_no = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    if (!header_seen) {
      if (line != kRecordsHeader) {
        Fail(ErrorCode::kParse, path.string() + ":" + std::to_string(line_no) + ": unexpected header");
      }
      header_seen = true;
      continue;
    }
    try {
      records.push_back(ParseRecordRow(line, spaces_));
    } catch (const Error& e) {
      Fail(ErrorCode::kParse, path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  std::stable_sort(records.begin(), records.end(),
                   [](const RunRecord& a, const RunRecord& b) { return a.iteration < b.iteration; });
  return records;
}

std::string MetricsStore::SessionCsv(std::string_view session_id) const {
  std::ifstream in(SessionPath(session_id), std::ios::binary);
  if (!in) return {};
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void MetricsStore::RegisterSession(const SessionIndexEntry& entry) {
  std::lock_guard<std::mutex> lock(mu_);
  SessionPath(entry.session_id);  // validates the id
  const fs::path path = dir_ / "index.csv";
  const bool fresh = !fs::exists(path);
  std::ofstream out(path, std::ios::binary | std::ios::app);
  if (!out) Fail(ErrorCode::kStorage, "cannot open " + path.string());
  if (fresh) out << "session_id,strategy,space_id,created\n";
  out << CsvField(entry.session_id) << ',' << CsvField(entry.strategy) << ','
      << CsvField(entry.space_id) << ',' << CsvField(entry.created) << '\n';
  out.flush();
  if (!out) Fail(ErrorCode::kStorage, "write failed for " + path.string());
}

std::vector<SessionIndexEntry> MetricsStore::ListSessions() const {
  std::vector<SessionIndexEntry> entries;
  std::ifstream in(dir_ / "index.csv", std::ios::binary);
  std::string line;
  bool header = true;
  while (std::getline(in, line)) {
    if (header) {
      header = false;
      continue;
    }
    if (line.empty()) continue;
    auto f = SplitCsvLine(line);
    if (f.size() != 4) Fail(ErrorCode::kParse, "corrupt index row '" + line + "'");
    entries.push_back({f[0], f[1], f[2], f[3]});
  }
  return entries;
}

}  // namespace ecotune
