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

#include "ecotune/transcript.h"

#include "ecotune/error.h"

namespace ecotune {

using nlohmann::json;

json EventToJson(const TranscriptEvent& e) {
  return {{"seq", e.seq}, {"type", e.type}, {"at", e.at}, {"data", e.data}};
}

TranscriptEvent EventFromJson(const json& doc) {
  TranscriptEvent e;
  try {
    e.seq = doc.at("seq").get<std::int64_t>();
    e.type = doc.at("type").get<std::string>();
    e.at = doc.at("at").get<std::string>();
    e.data = doc.value("data", json::object());
  } catch (const json::exception& ex) {
    Fail(ErrorCode::kParse, std::string("bad transcript event: ") + ex.what());
  }
  return e;
}

std::string EventLine(const TranscriptEvent& e) { return EventToJson(e).dump() + "\n"; }

std::vector<TranscriptEvent> LoadTranscript(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kNotFound, "no transcript at " + path.string());
  std::vector<TranscriptEvent> events;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json doc = json::parse(line, nullptr, false);
    if (doc.is_discarded()) {
      Fail(ErrorCode::kParse, path.string() + ":" + std::to_string(line_no) + ": not JSON");
    }
    events.push_back(EventFromJson(doc));
  }
  return events;
}

Transcript::Transcript(std::filesystem::path path, std::vector<TranscriptEvent> existing)
    : path_(std::move(path)), events_(std::move(existing)) {
  if (!path_.empty()) {
    std::filesystem::create_directories(path_.parent_path());
    out_.open(path_, std::ios::app | std::ios::binary);
    if (!out_) throw Error(ErrorCode::kStorage, "cannot open " + path_.string());
  }
}

const TranscriptEvent& Transcript::Append(std::string type, std::string at, json data) {
  std::lock_guard lock(mu_);
  TranscriptEvent e;
  e.seq = events_.empty() ? 1 : events_.back().seq + 1;
  e.type = std::move(type);
  e.at = std::move(at);
  e.data = std::move(data);
  if (out_.is_open()) {
    out_ << EventLine(e);
    out_.flush();
    if (!out_) throw Error(ErrorCode::kStorage, "write failed on " + path_.string());
  }
  events_.push_back(std::move(e));
  cv_.notify_all();
  return events_.back();
}

std::vector<TranscriptEvent> Transcript::Events() const {
  std::lock_guard lock(mu_);
  return events_;
}

std::vector<TranscriptEvent> Transcript::EventsAfter(std::int64_t seq) const {
  std::lock_guard lock(mu_);
  std::vector<TranscriptEvent> out;
  for (const auto& e : events_) {
    if (e.seq > seq) out.push_back(e);
  }
  return out;
}

std::int64_t Transcript::last_seq() const {
  std::lock_guard lock(mu_);
  return events_.empty() ? 0 : events_.back().seq;
}

std::vector<TranscriptEvent> Transcript::WaitAfter(std::int64_t after,
                                                   std::chrono::milliseconds timeout) {
  std::unique_lock lock(mu_);
  cv_.wait_for(lock, timeout, [&] {
    return closed_ || (!events_.empty() && events_.back().seq > after);
  });
  std::vector<TranscriptEvent> out;
  for (const auto& e : events_) {
    if (e.seq > after) out.push_back(e);
  }
  return out;
}

void Transcript::Close() {
  std::lock_guard lock(mu_);
  closed_ = true;
  cv_.notify_all();
}

bool Transcript::closed() const {
  std::lock_guard lock(mu_);
  return closed_;
}

std::string Transcript::Text() const {
  std::lock_guard lock(mu_);
  std::string out;
  for (const auto& e : events_) out += EventLine(e);
  return out;
}

}  // namespace ecotune
