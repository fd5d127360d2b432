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

#ifndef ECOTUNE_TRANSCRIPT_H_
#define ECOTUNE_TRANSCRIPT_H_

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace ecotune {

struct TranscriptEvent {
  std::int64_t seq = 0;  // 1-based
  std::string type;
  std::string at;  // ISO-8601 UTC
  nlohmann::json data;

  friend bool operator==(const TranscriptEvent&, const TranscriptEvent&) = default;
};

nlohmann::json EventToJson(const TranscriptEvent& e);
TranscriptEvent EventFromJson(const nlohmann::json& doc);
// One compact JSON document per line.
std::string EventLine(const TranscriptEvent& e);

// Reads an events.jsonl file; kParse names the offending line.
std::vector<TranscriptEvent> LoadTranscript(const std::filesystem::path& path);

// Append-only session event log. Thread-safe; readers can block for events
// past a sequence number.
class Transcript {
 public:
  Transcript() = default;
  // Appends to `path`, continuing after `existing`.
  Transcript(std::filesystem::path path, std::vector<TranscriptEvent> existing = {});

  const TranscriptEvent& Append(std::string type, std::string at, nlohmann::json data);

  std::vector<TranscriptEvent> Events() const;
  std::vector<TranscriptEvent> EventsAfter(std::int64_t seq) const;
  std::int64_t last_seq() const;

  // Waits until an event with seq > `after` exists, Close() is called or the
  // timeout passes. Returns the new events.
  std::vector<TranscriptEvent> WaitAfter(std::int64_t after, std::chrono::milliseconds timeout);
  void Close();
  bool closed() const;

  // Whole log as JSONL text.
  std::string Text() const;

 private:
  mutable std::mutex mu_;
  std::condition_variable cv_;
  std::filesystem::path path_;
  std::ofstream out_;
  std::vector<TranscriptEvent> events_;
  bool closed_ = false;
};

}  // namespace ecotune

#endif  // ECOTUNE_TRANSCRIPT_H_
