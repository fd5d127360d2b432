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

#ifndef ECOTUNE_LLM_GATEWAY_H_
#define ECOTUNE_LLM_GATEWAY_H_

#include <chrono>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ecotune/clock.h"
#include "ecotune/prompting.h"

namespace ecotune {

enum class GatewayKind { kApi, kRelay, kScripted };

std::string_view GatewayKindText(GatewayKind kind);
GatewayKind ParseGatewayKind(std::string_view text);

struct GatewayMode {
  GatewayKind kind = GatewayKind::kScripted;
  // api
  std::string endpoint;
  std::string model_name;
  std::string auth_token;
  double temperature = 0.7;
  std::chrono::seconds timeout{120};
  // scripted
  std::vector<std::string> script;

  // Checks that the mode-specific fields are present (and absent for the
  // other modes). Throws kContractViolation.
  void Check() const;

  // Fills endpoint/model/token from ECOTUNE_LLM_ENDPOINT, ECOTUNE_LLM_MODEL
  // and ECOTUNE_LLM_TOKEN where they are empty.
  static GatewayMode ApiFromEnvironment(GatewayMode base);
  static GatewayMode ApiFromEnvironment() { return ApiFromEnvironment(GatewayMode{}); }
};

// Persisted form omits the auth token.
nlohmann::json GatewayModeToJson(const GatewayMode& mode);
GatewayMode GatewayModeFromJson(const nlohmann::json& doc);

struct Exchange {
  int sequence_no = 0;
  PromptText prompt;
  std::optional<std::string> reply;
  std::optional<std::string> fulfilled_at;

  bool pending() const { return !reply.has_value(); }
};

struct ChatMessage {
  std::string role;  // "user" or "assistant"
  std::string content;
};

struct ChatRequest {
  std::string model;
  std::vector<ChatMessage> messages;
  double temperature = 0.7;
};

nlohmann::json ChatRequestToJson(const ChatRequest& request);
// Reads choices[0].message.content; kGateway on any other shape.
std::string ChatReplyFromJson(const nlohmann::json& response);

// Stateless chat-completions endpoint.
class ChatTransport {
 public:
  virtual ~ChatTransport() = default;
  // Returns the assistant reply text; throws a retryable kGateway error on
  // transport failure or timeout.
  virtual std::string Complete(const ChatRequest& request) = 0;
};

// POSTs a chat-completions body to `endpoint` with a bearer token.
std::unique_ptr<ChatTransport> MakeHttpChatTransport(const std::string& endpoint,
                                                     const std::string& auth_token,
                                                     std::chrono::seconds timeout);

// One conversation per session. Not internally synchronized: the owning
// session serializes access.
class LlmGateway {
 public:
  LlmGateway(GatewayMode mode, Clock* clock, std::unique_ptr<ChatTransport> transport = nullptr);

  const GatewayMode& mode() const { return mode_; }

  // Appends an exchange for `prompt`. api mode sends the full history plus
  // the prompt and fulfills it; scripted mode fulfills it with the next
  // script entry; relay mode leaves it pending. kBusy when an exchange is
  // already pending. A failed api call leaves the exchange pending; call
  // CompletePending to retry.
  const Exchange& RequestReply(PromptText prompt);

  // Re-sends a pending api/scripted exchange.
  const Exchange& CompletePending();

  // Relay fulfillment. kConflict for an unknown or fulfilled sequence_no,
  // kValidation for an empty reply.
  const Exchange& FulfillRelay(int sequence_no, std::string reply);

  // Transcript replay: appends a pending exchange without contacting any
  // endpoint, then (optionally) records its reply.
  const Exchange& ReplayRequest(PromptText prompt);
  const Exchange& ReplayReply(int sequence_no, std::string reply, std::string fulfilled_at);

  const std::vector<Exchange>& history() const { return history_; }
  const Exchange* pending() const;
  std::size_t script_position() const { return script_pos_; }

  // Conversation sent to an api endpoint for the pending exchange.
  ChatRequest BuildRequest() const;

 private:
  Exchange& Fulfill(Exchange& ex, std::string reply);

  GatewayMode mode_;
  Clock* clock_;
  std::unique_ptr<ChatTransport> transport_;
  std::vector<Exchange> history_;
  std::size_t script_pos_ = 0;
};

}  // namespace ecotune

#endif  // ECOTUNE_LLM_GATEWAY_H_
