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

#include "ecotune/service.h"

#include <condition_variable>
#include <deque>
#include <functional>
#include <future>
#include <iostream>
#include <map>
#include <mutex>
#include <thread>

#include <httplib.h>

#include "ecotune/error.h"
#include "ecotune/number_format.h"
#include "ecotune/report.h"
#include "ecotune/workspace.h"

namespace ecotune {
namespace {

using nlohmann::json;

int HttpStatus(ErrorCode code) {
  switch (code) {
    case ErrorCode::kNotFound:
      return 404;
    case ErrorCode::kContractViolation:
    case ErrorCode::kUnsupportedDimension:
    case ErrorCode::kParse:
    case ErrorCode::kDegenerateVariance:
    case ErrorCode::kUndefinedBreakEven:
      return 400;
    case ErrorCode::kValidation:
      return 422;
    case ErrorCode::kConflict:
    case ErrorCode::kBusy:
    case ErrorCode::kProtocol:
    case ErrorCode::kEmptySession:
      return 409;
    case ErrorCode::kGateway:
      return 502;
    default:
      return 500;
  }
}

void SendJson(httplib::Response& res, const json& body, int status = 200) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void SendError(httplib::Response& res, ErrorCode code, const std::string& message) {
  SendJson(res, {{"error", {{"code", ErrorCodeName(code)}, {"message", message}}}},
           HttpStatus(code));
}

json ParseBody(const httplib::Request& req) {
  if (Trim(req.body).empty()) return json::object();
  json doc = json::parse(req.body, nullptr, false);
  if (doc.is_discarded()) Fail(ErrorCode::kParse, "request body is not JSON");
  if (doc.is_null()) return json::object();
  if (!doc.is_object()) Fail(ErrorCode::kParse, "request body must be a JSON object");
  return doc;
}

std::optional<double> QueryDouble(const httplib::Request& req, const char* name) {
  if (!req.has_param(name)) return std::nullopt;
  auto v = ParseDouble(req.get_param_value(name));
  if (!v) Fail(ErrorCode::kParse, std::string("bad query parameter ") + name);
  return v;
}

std::optional<std::int64_t> QueryInt(const httplib::Request& req, const char* name) {
  if (!req.has_param(name)) return std::nullopt;
  auto v = ParseInt(req.get_param_value(name));
  if (!v) Fail(ErrorCode::kParse, std::string("bad query parameter ") + name);
  return v;
}

std::string SseFrame(const TranscriptEvent& e) {
  return "id: " + std::to_string(e.seq) + "\nevent: " + e.type + "\ndata: " +
         EventToJson(e).dump() + "\n\n";
}

// Serializes every mutation of one session on its own thread.
class SessionOwner {
 public:
  explicit SessionOwner(std::unique_ptr<Session> session) : session_(std::move(session)) {
    UpdateSnapshot();
    worker_ = std::thread([this] { Loop(); });
  }

  ~SessionOwner() { Stop(); }

  void Stop() {
    {
      std::lock_guard lock(mu_);
      if (stopping_) return;
      stopping_ = true;
    }
    cv_.notify_all();
    if (worker_.joinable()) worker_.join();
    for (auto& task : queue_) task.set_exception(std::make_exception_ptr(
        Error(ErrorCode::kBusy, "service is shutting down")));
    queue_.clear();
  }

  // Runs `fn` on the owner thread and returns its result.
  json Submit(std::function<json(Session&)> fn) {
    std::future<json> result;
    {
      std::lock_guard lock(mu_);
      if (stopping_) Fail(ErrorCode::kBusy, "service is shutting down");
      queue_.emplace_back();
      result = queue_.back().get_future();
      fns_.push_back(std::move(fn));
    }
    cv_.notify_all();
    return result.get();
  }

  json Snapshot() const {
    std::lock_guard lock(snap_mu_);
    return snapshot_;
  }

  Transcript& transcript() { return session_->transcript(); }
  const SessionDefinition& definition() const { return session_->definition(); }

 private:
  bool Automatic() const {
    const SessionState s = session_->state();
    return !stalled_ && (s == SessionState::kAwaitingProposal || s == SessionState::kRunningTrial);
  }

  void Loop() {
    for (;;) {
      std::promise<json> promise;
      std::function<json(Session&)> fn;
      {
        std::unique_lock lock(mu_);
        cv_.wait(lock, [&] { return stopping_ || !queue_.empty() || Automatic(); });
        if (stopping_) return;
        if (!queue_.empty()) {
          promise = std::move(queue_.front());
          queue_.pop_front();
          fn = std::move(fns_.front());
          fns_.pop_front();
        }
      }
      if (fn) {
        try {
          stalled_ = false;
          json out = fn(*session_);
          UpdateSnapshot();
          promise.set_value(out.is_null() ? Snapshot() : std::move(out));
        } catch (...) {
          UpdateSnapshot();
          promise.set_exception(std::current_exception());
        }
        continue;
      }
      try {
        session_->Step();
      } catch (const std::exception& e) {
        stalled_ = true;
        last_error_ = e.what();
        std::cerr << "session " << session_->definition().session_id << ": " << e.what()
                  << "\n";
      }
      UpdateSnapshot();
    }
  }

  void UpdateSnapshot() {
    json j = session_->ToJson();
    if (stalled_) j["last_error"] = last_error_;
    std::lock_guard lock(snap_mu_);
    snapshot_ = std::move(j);
  }

  std::unique_ptr<Session> session_;
  std::mutex mu_;
  std::condition_variable cv_;
  std::deque<std::promise<json>> queue_;
  std::deque<std::function<json(Session&)>> fns_;
  bool stopping_ = false;
  bool stalled_ = false;
  std::string last_error_;
  mutable std::mutex snap_mu_;
  json snapshot_;
  std::thread worker_;
};

}  // namespace

void ServiceConfig::Check() const {
  Require(port >= 0 && port <= 65535, "port must be in [0, 65535]");
  Require(!data_dir.empty(), "data directory is required");
}

class Service::Impl {
 public:
  explicit Impl(ServiceConfig config) : config_(std::move(config)) {
    config_.Check();
    std::unique_ptr<Clock> clock;
    if (config_.logical_clock) {
      clock = std::make_unique<LogicalClock>();
    } else {
      clock = std::make_unique<SystemClock>();
    }
    workspace_ = std::make_unique<Workspace>(config_.data_dir, std::move(clock));
    // SO_REUSEADDR only: a second service must not share a bound port.
    server_.set_socket_options([](socket_t sock) {
      int yes = 1;
      setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, reinterpret_cast<const void*>(&yes), sizeof(yes));
    });
    Routes();
  }

  ~Impl() { Shutdown(); }

  int Bind() {
    for (const auto& id : workspace_->SessionIds()) {
      try {
        Adopt(workspace_->Open(id));
      } catch (const std::exception& e) {
        std::cerr << "skipping session " << id << ": " << e.what() << "\n";
      }
    }
    if (config_.port == 0) {
      port_ = server_.bind_to_any_port(config_.bind_address);
    } else if (server_.bind_to_port(config_.bind_address, config_.port)) {
      port_ = config_.port;
    } else {
      port_ = -1;
    }
    if (port_ <= 0) {
      Fail(ErrorCode::kStartup, "cannot bind " + config_.bind_address + ":" +
                                    std::to_string(config_.port));
    }
    return port_;
  }

  void Run() { server_.listen_after_bind(); }

  int Start() {
    const int port = Bind();
    thread_ = std::thread([this] { Run(); });
    server_.wait_until_ready();
    return port;
  }

  void Shutdown() {
    if (shut_down_.exchange(true)) return;
    server_.stop();
    if (thread_.joinable()) thread_.join();
    std::lock_guard lock(sessions_mu_);
    for (auto& [id, owner] : sessions_) {
      owner->transcript().Close();
      owner->Stop();
    }
  }

  int port() const { return port_; }

 private:
  std::shared_ptr<SessionOwner> Adopt(std::unique_ptr<Session> session) {
    const std::string id = session->definition().session_id;
    auto owner = std::make_shared<SessionOwner>(std::move(session));
    std::lock_guard lock(sessions_mu_);
    sessions_[id] = owner;
    return owner;
  }

  std::shared_ptr<SessionOwner> Find(const std::string& id) {
    std::lock_guard lock(sessions_mu_);
    auto it = sessions_.find(id);
    if (it == sessions_.end()) Fail(ErrorCode::kNotFound, "unknown session '" + id + "'");
    return it->second;
  }

  AnalysisOptions Options(const httplib::Request& req, const SessionDefinition* d) {
    AnalysisOptions o;
    if (d) {
      o.threshold = d->stopping.threshold;
      o.threshold_image = d->stopping.threshold_image;
      o.max_iterations = d->stopping.max_iterations;
    }
    if (auto v = QueryDouble(req, "threshold")) o.threshold = *v;
    if (auto v = QueryDouble(req, "threshold_image")) o.threshold_image = *v;
    if (auto v = QueryInt(req, "max_iter")) o.max_iterations = static_cast<int>(*v);
    Require(o.max_iterations >= 1, "max_iter must be at least 1");
    return o;
  }

  using Handler = std::function<void(const httplib::Request&, httplib::Response&)>;

  static Handler Guard(Handler h) {
    return [h = std::move(h)](const httplib::Request& req, httplib::Response& res) {
      try {
        h(req, res);
      } catch (const Error& e) {
        SendError(res, e.code(), e.what());
      } catch (const json::exception& e) {
        SendError(res, ErrorCode::kParse, e.what());
      } catch (const std::exception& e) {
        SendError(res, ErrorCode::kStorage, e.what());
      }
    };
  }

  void Routes() {
    server_.set_pre_routing_handler([this](const httplib::Request& req, httplib::Response& res) {
      if (config_.auth_token.empty() || req.path == "/healthz") {
        return httplib::Server::HandlerResponse::Unhandled;
      }
      if (req.get_header_value("Authorization") != "Bearer " + config_.auth_token) {
        SendJson(res, {{"error", {{"code", "unauthorized"}, {"message", "missing or bad token"}}}},
                 401);
        return httplib::Server::HandlerResponse::Handled;
      }
      return httplib::Server::HandlerResponse::Unhandled;
    });

    server_.Get("/healthz", Guard([](const httplib::Request&, httplib::Response& res) {
      SendJson(res, {{"status", "ok"}, {"version", kServiceVersion}});
    }));

    server_.Post("/sessions", Guard([this](const httplib::Request& req, httplib::Response& res) {
      json body = ParseBody(req);
      SessionDefinition d = DefinitionFromJson(body);
      if (!body.contains("gateway")) d.gateway = config_.gateway_defaults;
      if (!body.contains("workload") && d.space_id == kPytorchMultimodalSpaceId) {
        d.workload = WorkloadSpec::Multimodal();
      }
      std::shared_ptr<SessionOwner> owner;
      {
        std::lock_guard lock(create_mu_);
        if (!d.session_id.empty()) {
          std::lock_guard slock(sessions_mu_);
          if (sessions_.count(d.session_id)) {
            Fail(ErrorCode::kConflict, "session '" + d.session_id + "' already exists");
          }
        }
        owner = Adopt(workspace_->Create(std::move(d)));
      }
      SendJson(res, owner->Snapshot(), 201);
    }));

    server_.Get("/sessions", Guard([this](const httplib::Request&, httplib::Response& res) {
      json list = json::array();
      std::lock_guard lock(sessions_mu_);
      for (const auto& [id, owner] : sessions_) list.push_back(owner->Snapshot());
      SendJson(res, {{"sessions", std::move(list)}});
    }));

    server_.Get(R"(/sessions/([^/]+))",
                Guard([this](const httplib::Request& req, httplib::Response& res) {
                  SendJson(res, Find(req.matches[1])->Snapshot());
                }));

    server_.Get(R"(/sessions/([^/]+)/prompt)",
                Guard([this](const httplib::Request& req, httplib::Response& res) {
                  json snap = Find(req.matches[1])->Snapshot();
                  if (!snap.contains("prompt")) {
                    Fail(ErrorCode::kConflict, "session has no prompt awaiting a reply (state " +
                                                   snap.value("state", "") + ")");
                  }
                  if (req.get_param_value("format") == "text") {
                    res.set_content(snap["prompt"]["body"].get<std::string>(), "text/plain");
                    return;
                  }
                  SendJson(res, snap["prompt"]);
                }));

    server_.Post(R"(/sessions/([^/]+)/reply)",
                 Guard([this](const httplib::Request& req, httplib::Response& res) {
                   json body = ParseBody(req);
                   if (!body.contains("reply") || !body["reply"].is_string()) {
                     Fail(ErrorCode::kValidation, "body needs a 'reply' string");
                   }
                   std::string reply = body["reply"].get<std::string>();
                   std::optional<int> seq;
                   if (body.contains("sequence_no")) seq = body["sequence_no"].get<int>();
                   SendJson(res, Find(req.matches[1])->Submit([=](Session& s) -> json {
                     auto target = seq ? seq : s.PendingSequence();
                     if (!target) Fail(ErrorCode::kConflict, "no prompt awaits a reply");
                     s.FulfillRelay(*target, reply);
                     return nullptr;
                   }));
                 }));

    server_.Post(R"(/sessions/([^/]+)/approval)",
                 Guard([this](const httplib::Request& req, httplib::Response& res) {
                   json body = ParseBody(req);
                   SendJson(res, Find(req.matches[1])->Submit([body](Session& s) -> json {
                     Approval a;
                     a.decision = ParseApprovalDecision(body.value("decision", ""));
                     a.note = body.value("note", "");
                     if (body.contains("config")) {
                       a.edited_config = ConfigFromJson(body["config"], s.space());
                     }
                     s.SubmitApproval(std::move(a));
                     return nullptr;
                   }));
                 }));

    server_.Post(R"(/sessions/([^/]+)/stop)",
                 Guard([this](const httplib::Request& req, httplib::Response& res) {
                   json body = ParseBody(req);
                   SendJson(res, Find(req.matches[1])->Submit([body](Session& s) -> json {
                     s.Stop(body.value("note", ""));
                     return nullptr;
                   }));
                 }));

    server_.Get(R"(/sessions/([^/]+)/events)",
                Guard([this](const httplib::Request& req, httplib::Response& res) {
                  auto owner = Find(req.matches[1]);
                  std::int64_t after = 0;
                  if (req.has_header("Last-Event-ID")) {
                    after = ParseInt(req.get_header_value("Last-Event-ID")).value_or(0);
                  }
                  if (auto v = QueryInt(req, "after")) after = *v;
                  const bool follow = req.get_param_value("follow") != "0";
                  res.set_header("Cache-Control", "no-cache");
                  res.set_chunked_content_provider(
                      "text/event-stream",
                      [this, owner, after, follow](std::size_t, httplib::DataSink& sink) mutable {
                        auto events = follow ? owner->transcript().WaitAfter(
                                                   after, std::chrono::milliseconds(250))
                                             : owner->transcript().EventsAfter(after);
                        for (const auto& e : events) {
                          const std::string frame = SseFrame(e);
                          if (!sink.write(frame.data(), frame.size())) return false;
                          after = e.seq;
                        }
                        const bool drained = owner->transcript().last_seq() <= after;
                        if (!follow || shut_down_ ||
                            (owner->transcript().closed() && drained)) {
                          sink.done();
                        }
                        return true;
                      });
                }));

    server_.Get(R"(/sessions/([^/]+)/records.csv)",
                Guard([this](const httplib::Request& req, httplib::Response& res) {
                  const std::string id = req.matches[1];
                  Find(id);
                  res.set_content(workspace_->store().SessionCsv(id), "text/csv");
                }));

    server_.Get(R"(/sessions/([^/]+)/analysis)",
                Guard([this](const httplib::Request& req, httplib::Response& res) {
                  const std::string id = req.matches[1];
                  auto owner = Find(id);
                  AnalysisOptions o = Options(req, &owner->definition());
                  SessionAnalysis a = AnalyzeSession(workspace_->store().LoadSession(id), o);
                  SendJson(res, SessionAnalysisToJson(a, workspace_->spaces()));
                }));

    server_.Post("/analysis/compare",
                 Guard([this](const httplib::Request& req, httplib::Response& res) {
                   json body = ParseBody(req);
                   AnalysisOptions o = Options(req, nullptr);
                   o.threshold = body.value("threshold", o.threshold);
                   o.max_iterations = body.value("max_iter", o.max_iterations);
                   auto load = [&](const char* key) {
                     if (!body.contains(key) || !body[key].is_array()) {
                       Fail(ErrorCode::kValidation, std::string("body needs a '") + key +
                                                        "' list of session ids");
                     }
                     std::vector<SessionAnalysis> out;
                     for (const auto& id : body[key]) {
                       out.push_back(AnalyzeSession(
                           workspace_->store().LoadSession(id.get<std::string>()), o));
                     }
                     return out;
                   };
                   auto a = load("a");
                   auto b = load("b");
                   json ia = json::array();
                   json ib = json::array();
                   for (const auto& s : a) ia.push_back(s.threshold.iterations);
                   for (const auto& s : b) ib.push_back(s.threshold.iterations);
                   json out = StatReportToJson(CompareIterations(a, b));
                   out["iterations_a"] = std::move(ia);
                   out["iterations_b"] = std::move(ib);
                   SendJson(res, out);
                 }));

    server_.Get("/analysis/report",
                Guard([this](const httplib::Request& req, httplib::Response& res) {
                  AnalysisOptions o = Options(req, nullptr);
                  std::vector<std::vector<RunRecord>> sessions;
                  for (const auto& id : Split(req.get_param_value("sessions"))) {
                    sessions.push_back(workspace_->store().LoadSession(id));
                  }
                  Require(!sessions.empty(), "sessions query parameter lists no ids");
                  SendJson(res, ReportToJson(BuildReport(sessions, o), workspace_->spaces()));
                }));
  }

  static std::vector<std::string> Split(const std::string& text) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start <= text.size()) {
      std::size_t comma = text.find(',', start);
      if (comma == std::string::npos) comma = text.size();
      std::string part(Trim(std::string_view(text).substr(start, comma - start)));
      if (!part.empty()) out.push_back(part);
      start = comma + 1;
    }
    return out;
  }

  ServiceConfig config_;
  std::unique_ptr<Workspace> workspace_;
  httplib::Server server_;
  std::thread thread_;
  int port_ = -1;
  std::atomic<bool> shut_down_{false};
  std::mutex create_mu_;
  std::mutex sessions_mu_;
  std::map<std::string, std::shared_ptr<SessionOwner>> sessions_;
};

Service::Service(ServiceConfig config) : impl_(std::make_unique<Impl>(std::move(config))) {}
Service::~Service() = default;
int Service::Bind() { return impl_->Bind(); }
void Service::Run() { impl_->Run(); }
int Service::Start() { return impl_->Start(); }
void Service::Shutdown() { impl_->Shutdown(); }
int Service::port() const { return impl_->port(); }

}  // namespace ecotune
