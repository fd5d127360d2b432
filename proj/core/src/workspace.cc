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

#include "ecotune/workspace.h"

#include <algorithm>
#include <fstream>
#include <regex>

#include "ecotune/error.h"

namespace ecotune {

namespace fs = std::filesystem;

Workspace::Workspace(fs::path data_dir, std::unique_ptr<Clock> clock)
    : dir_(std::move(data_dir)), clock_(std::move(clock)) {
  if (!clock_) clock_ = std::make_unique<SystemClock>();
  std::error_code ec;
  fs::create_directories(dir_ / "sessions", ec);
  if (ec) throw Error(ErrorCode::kStorage, "cannot create " + dir_.string() + ": " + ec.message());
  store_ = std::make_unique<MetricsStore>(dir_, spaces_);
}

fs::path Workspace::SessionDir(std::string_view session_id) const {
  static const std::regex kSafe("[A-Za-z0-9][A-Za-z0-9._-]{0,127}");
  if (!std::regex_match(session_id.begin(), session_id.end(), kSafe)) {
    Fail(ErrorCode::kValidation, "invalid session id '" + std::string(session_id) + "'");
  }
  return dir_ / "sessions" / std::string(session_id);
}

bool Workspace::HasSession(std::string_view session_id) const {
  return fs::exists(SessionDir(session_id) / "definition.json");
}

std::vector<std::string> Workspace::SessionIds() const {
  std::vector<std::string> ids;
  for (const auto& entry : fs::directory_iterator(dir_ / "sessions")) {
    if (entry.is_directory() && fs::exists(entry.path() / "definition.json")) {
      ids.push_back(entry.path().filename().string());
    }
  }
  std::sort(ids.begin(), ids.end());
  return ids;
}

SessionDefinition Workspace::LoadDefinition(std::string_view session_id) const {
  const fs::path path = SessionDir(session_id) / "definition.json";
  std::ifstream in(path);
  if (!in) Fail(ErrorCode::kNotFound, "unknown session '" + std::string(session_id) + "'");
  nlohmann::json doc = nlohmann::json::parse(in, nullptr, false);
  if (doc.is_discarded()) Fail(ErrorCode::kParse, path.string() + ": not JSON");
  return DefinitionFromJson(doc);
}

std::string Workspace::NewSessionId() {
  for (int n = static_cast<int>(SessionIds().size()) + 1;; ++n) {
    std::string id = "session-" + std::to_string(n);
    if (!HasSession(id)) return id;
  }
}

SessionContext Workspace::Context(const SessionDefinition& d,
                                  std::unique_ptr<ChatTransport> transport) {
  SessionContext c;
  c.spaces = &spaces_;
  c.store = store_.get();
  c.clock = clock_.get();
  c.transport = std::move(transport);
  c.transcript_path = SessionDir(d.session_id) / "events.jsonl";
  c.work_dir = SessionDir(d.session_id) / "runs";
  return c;
}

std::unique_ptr<Session> Workspace::Create(SessionDefinition definition,
                                           std::unique_ptr<ChatTransport> transport) {
  if (definition.session_id.empty()) definition.session_id = NewSessionId();
  const fs::path dir = SessionDir(definition.session_id);
  if (fs::exists(dir / "definition.json")) {
    Fail(ErrorCode::kConflict, "session '" + definition.session_id + "' already exists");
  }
  definition.Check();
  spaces_.Get(definition.space_id);
  fs::create_directories(dir);
  {
    std::ofstream out(dir / "definition.json", std::ios::binary);
    out << DefinitionToJson(definition).dump(2) << "\n";
    if (!out) Fail(ErrorCode::kStorage, "cannot write " + (dir / "definition.json").string());
  }
  SessionContext context = Context(definition, std::move(transport));
  try {
    return Session::Start(std::move(definition), std::move(context));
  } catch (...) {
    std::error_code ec;
    fs::remove_all(dir, ec);
    throw;
  }
}

std::unique_ptr<Session> Workspace::Open(std::string_view session_id,
                                         std::unique_ptr<ChatTransport> transport) {
  SessionDefinition definition = LoadDefinition(session_id);
  const fs::path events = SessionDir(session_id) / "events.jsonl";
  std::vector<TranscriptEvent> log = fs::exists(events) ? LoadTranscript(events)
                                                        : std::vector<TranscriptEvent>{};
  SessionContext context = Context(definition, std::move(transport));
  return Session::Restore(std::move(definition), std::move(context), std::move(log));
}

}  // namespace ecotune
