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

#include "ecotune/llm_gateway.h"

#include <cstdlib>

#include "ecotune/error.h"
#include "ecotune/number_format.h"

namespace ecotune {

std::string_view GatewayKindText(GatewayKind kind) {
  switch (kind) {
    case GatewayKind::kApi: return "api";
    case GatewayKind::kRelay: return "relay";
    case GatewayKind::kScripted: return "scripted";
  }
  return "unknown";
}

GatewayKind ParseGatewayKind(std::string_view text) {
  if (text == "api") return GatewayKind::kApi;
  if (text == "relay") return GatewayKind::kRelay;
  if (text == "scripted") return GatewayKind::kScripted;
  Fail(ErrorCode::kParse, "unknown gateway mode '" + std::string(text) + "'");
}

void GatewayMode::Check() const {
  const bool api = kind == GatewayKind::kApi;
  Require(api == !endpoint.empty(), "endpoint must be set exactly for api mode");
  Require(api == !model_name.empty(), "model name must be set exactly for api mode");
  Require(kind == GatewayKind::kScripted || script.empty(),
          "script is only valid for scripted mode");
  Require(timeout.count() > 0, "gateway timeout must be positive");
}

GatewayMode GatewayMode::ApiFromEnvironment(GatewayMode base) {
  base.kind = GatewayKind::kApi;
  auto fill = [](std::string& field, const char* var) {
    if (!field.empty()) return;
    if (const char* v = std::getenv(var)) field = v;
  };
  fill(base.endpoint, "ECOTUNE_LLM_ENDPOINT");
  fill(base.model_name, "ECOTUNE_LLM_MODEL");
  fill(base.auth_token, "ECOTUNE_LLM_TOKEN");
  return base;
}

nlohmann::json GatewayModeToJson(const GatewayMode& mode) {
  nlohmann::json j = {{"mode", GatewayKindText(mode.kind)}};
  if (mode.kind == GatewayKind::kApi) {
    j["endpoint"] = mode.endpoint;
    j["model_name"] = mode.model_name;
    j["temperature"] = mode.temperature;
    j["timeout_s"] = mode.timeout.count();
  }
  if (mode.kind == GatewayKind::kScripted) j["script"] = mode.script;
  return j;
}

GatewayMode GatewayModeFromJson(const nlohmann::json& doc) {
  GatewayMode mode;
  mode.kind = ParseGatewayKind(doc.at("mode").get<std::string>());
  mode.endpoint = doc.value("endpoint", "");
  mode.model_name = doc.value("model_name", "");
  mode.temperature = doc.value("temperature", 0.7);
  mode.timeout = std::chrono::seconds(doc.value("timeout_s", 120));
  if (doc.contains("script")) mode.script = doc["script"].get<std::vector<std::string>>();
  if (mode.kind == GatewayKind::kApi) mode = GatewayMode::ApiFromEnvironment(mode);
  return mode;
}

nlohmann::json ChatRequestToJson(const ChatRequest& request) {
  nlohmann::json messages = nlohmann::json::array();
  for (const auto& m : request.messages) {
    messages.push_back({{"role", m.role}, {"content", m.content}});
  }
  return {{"model", request.model},
          {"messages", std::move(messages)},
          {"temperature", request.temperature}};
}

std::string ChatReplyFromJson(const nlohmann::json& response) {
  try {
    return response.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kGateway, std::string("unexpected chat response shape: ") + e.what(),
                /*retryable=*/true);
  }
}

LlmGateway::LlmGateway(GatewayMode mode, Clock* clock, std::unique_ptr<ChatTransport> transport)
    : mode_(std::move(mode)), clock_(clock), transport_(std::move(transport)) {
  mode_.Check();
  Require(clock_ != nullptr, "gateway needs a clock");
  if (mode_.kind == GatewayKind::kApi && !transport_) {
    transport_ = MakeHttpChatTransport(mode_.endpoint, mode_.auth_token, mode_.timeout);
  }
}

const Exchange* LlmGateway::pending() const {
  if (!history_.empty() && history_.back().pending()) return &history_.back();
  return nullptr;
}

ChatRequest LlmGateway::BuildRequest() const {
  ChatRequest request;
  request.model = mode_.model_name;
  request.temperature = mode_.temperature;
  for (const auto& ex : history_) {
    request.messages.push_back({"user", ex.prompt.body});
    if (ex.reply) request.messages.push_back({"assistant", *ex.reply});
  }
  return request;
}

Exchange& LlmGateway::Fulfill(Exchange& ex, std::string reply) {
  ex.reply = std::move(reply);
  ex.fulfilled_at = clock_->NowIso8601();
  return ex;
}

const Exchange& LlmGateway::ReplayRequest(PromptText prompt) {
  if (pending()) throw Error(ErrorCode::kBusy, "an exchange is already pending");
  Exchange ex;
  ex.sequence_no = static_cast<int>(history_.size()) + 1;
  ex.prompt = std::move(prompt);
  history_.push_back(std::move(ex));
  return history_.back();
}

const Exchange& LlmGateway::RequestReply(PromptText prompt) {
  ReplayRequest(std::move(prompt));
  if (mode_.kind == GatewayKind::kRelay) return history_.back();
  return CompletePending();
}

const Exchange& LlmGateway::CompletePending() {
  Require(mode_.kind != GatewayKind::kRelay, "relay exchanges are fulfilled by the operator");
  if (!pending()) throw Error(ErrorCode::kConflict, "no pending exchange");
  Exchange& ex = history_.back();
  if (mode_.kind == GatewayKind::kScripted) {
    if (script_pos_ >= mode_.script.size()) {
      throw Error(ErrorCode::kGateway, "script exhausted after " +
                                           std::to_string(mode_.script.size()) + " replies");
    }
    return Fulfill(ex, mode_.script[script_pos_++]);
  }
  std::string reply = transport_->Complete(BuildRequest());
  return Fulfill(ex, std::move(reply));
}

const Exchange& LlmGateway::FulfillRelay(int sequence_no, std::string reply) {
  if (sequence_no < 1 || sequence_no > static_cast<int>(history_.size())) {
    throw Error(ErrorCode::kConflict, "unknown exchange " + std::to_string(sequence_no));
  }
  Exchange& ex = history_[static_cast<std::size_t>(sequence_no - 1)];
  if (!ex.pending()) {
    throw Error(ErrorCode::kConflict,
                "exchange " + std::to_string(sequence_no) + " is already fulfilled");
  }
  if (Trim(reply).empty()) throw Error(ErrorCode::kValidation, "reply text is empty");
  return Fulfill(ex, std::move(reply));
}

const Exchange& LlmGateway::ReplayReply(int sequence_no, std::string reply,
                                        std::string fulfilled_at) {
  Exchange* ex = pending() ? &history_.back() : nullptr;
  if (!ex || ex->sequence_no != sequence_no) {
    throw Error(ErrorCode::kConflict, "replayed reply does not match the pending exchange");
  }
  ex->reply = std::move(reply);
  ex->fulfilled_at = std::move(fulfilled_at);
  if (mode_.kind == GatewayKind::kScripted) ++script_pos_;
  return *ex;
}

}  // namespace ecotune
