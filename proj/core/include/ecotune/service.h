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

#ifndef ECOTUNE_SERVICE_H_
#define ECOTUNE_SERVICE_H_

#include <filesystem>
#include <memory>
#include <string>

#include <nlohmann/json.hpp>

#include "ecotune/clock.h"
#include "ecotune/llm_gateway.h"

namespace ecotune {

inline constexpr std::string_view kServiceVersion = "0.1.0";

struct ServiceConfig {
  std::string bind_address = "127.0.0.1";
  int port = 8080;  // 0 picks a free port
  std::filesystem::path data_dir = "ecotune-data";
  std::string auth_token;          // empty disables auth
  GatewayMode gateway_defaults;    // for definitions without a gateway
  bool logical_clock = false;

  void Check() const;
};

// HTTP front end over a Workspace. Each session has an owner thread that
// applies its events in order; reads use a snapshot and never block on it.
class Service {
 public:
  explicit Service(ServiceConfig config);
  ~Service();

  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  // Restores every session in the data directory and binds the socket.
  // kStartup when the address is unavailable. Returns the bound port.
  int Bind();
  // Serves until Shutdown(). Bind() must have succeeded.
  void Run();
  // Bind() plus Run() on a background thread.
  int Start();
  // Stops accepting requests, drains session queues and joins threads.
  void Shutdown();

  int port() const;

 private:
  class Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace ecotune

#endif  // ECOTUNE_SERVICE_H_
