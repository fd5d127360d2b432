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

#ifndef ECOTUNE_WORKSPACE_H_
#define ECOTUNE_WORKSPACE_H_

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "ecotune/clock.h"
#include "ecotune/metrics_store.h"
#include "ecotune/orchestrator.h"

namespace ecotune {

// Data directory shared by the CLI and the service:
//   sessions/<id>/definition.json   session definition
//   sessions/<id>/events.jsonl      transcript
//   sessions/<id>/runs/             external runner files
//   records/<id>.csv, index.csv     metrics store
class Workspace {
 public:
  Workspace(std::filesystem::path data_dir, std::unique_ptr<Clock> clock);

  const std::filesystem::path& dir() const { return dir_; }
  SpaceRegistry& spaces() { return spaces_; }
  const SpaceRegistry& spaces() const { return spaces_; }
  MetricsStore& store() { return *store_; }
  const MetricsStore& store() const { return *store_; }
  Clock& clock() { return *clock_; }

  std::filesystem::path SessionDir(std::string_view session_id) const;
  bool HasSession(std::string_view session_id) const;
  // Ids with a definition file, sorted.
  std::vector<std::string> SessionIds() const;
  SessionDefinition LoadDefinition(std::string_view session_id) const;

  // kConflict when the id exists. An empty id gets a fresh one.
  std::unique_ptr<Session> Create(SessionDefinition definition,
                                  std::unique_ptr<ChatTransport> transport = nullptr);
  // Restores from the transcript. kNotFound for unknown ids.
  std::unique_ptr<Session> Open(std::string_view session_id,
                                std::unique_ptr<ChatTransport> transport = nullptr);

  std::string NewSessionId();

 private:
  SessionContext Context(const SessionDefinition& d, std::unique_ptr<ChatTransport> transport);

  std::filesystem::path dir_;
  std::unique_ptr<Clock> clock_;
  SpaceRegistry spaces_;
  std::unique_ptr<MetricsStore> store_;
};

}  // namespace ecotune

#endif  // ECOTUNE_WORKSPACE_H_
