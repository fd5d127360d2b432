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

#include <httplib.h>

#include <regex>

#include "ecotune/error.h"
#include "ecotune/llm_gateway.h"

namespace ecotune {
namespace {

struct SplitUrl {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

SplitUrl Split(const std::string& url) {
  static const std::regex pattern(R"(^(https?://[^/]+)(/.*)?$)");
  std::smatch m;
  if (!std::regex_match(url, m, pattern)) {
    Fail(ErrorCode::kContractViolation, "malformed endpoint URL '" + url + "'");
  }
  return {m[1].str(), m[2].matched ? m[2].str() : "/"};
}

class HttpChatTransport final : public ChatTransport {
 public:
  HttpChatTransport(const std::string& endpoint, std::string token, std::chrono::seconds timeout)
      : url_(Split(endpoint)), token_(std::move(token)), timeout_(timeout) {}

  std::string Complete(const ChatRequest& request) override {
    httplib::Client client(url_.origin);
    client.set_connection_timeout(timeout_);
    client.set_read_timeout(timeout_);
    client.set_write_timeout(timeout_);
    httplib::Headers headers;
    if (!token_.empty()) headers.emplace("Authorization", "Bearer " + token_);
    auto res = client.Post(url_.path, headers, ChatRequestToJson(request).dump(),
                           "application/json");
    if (!res) {
      throw Error(ErrorCode::kGateway,
                  "chat endpoint transport failure: " + httplib::to_string(res.error()),
                  /*retryable=*/true);
    }
    if (res->status < 200 || res->status >= 300) {
      throw Error(ErrorCode::kGateway,
                  "chat endpoint returned HTTP " + std::to_string(res->status),
                  /*retryable=*/res->status >= 500 || res->status == 429);
    }
    auto doc = nlohmann::json::parse(res->body, nullptr, false);
    if (doc.is_discarded()) {
      throw Error(ErrorCode::kGateway, "chat endpoint returned a non-JSON body", true);
    }
    return ChatReplyFromJson(doc);
  }

 private:
  SplitUrl url_;
  std::string token_;
  std::chrono::seconds timeout_;
};

}  // namespace

std::unique_ptr<ChatTransport> MakeHttpChatTransport(const std::string& endpoint,
                                                     const std::string& auth_token,
                                                     std::chrono::seconds timeout) {
  return std::make_unique<HttpChatTransport>(endpoint, auth_token, timeout);
}

}  // namespace ecotune
