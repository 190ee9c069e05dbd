// Copyright 2026 The qcascade Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "qcascade/http_backend.h"

#include <chrono>
#include <cmath>
#include <utility>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "httplib.h"
#include "qcascade/error.h"

namespace qcascade {
namespace {

using json = nlohmann::json;

}  // namespace

std::string serialize_backend_request(const BackendRequest& request) {
  nlohmann::ordered_json j;
  j["question"] = request.question;
  j["passages"] = request.passages;
  j["max_new_tokens"] = request.max_new_tokens;
  return j.dump();
}

BackendRequest parse_backend_request(std::string_view body) {
  auto bad = [](std::string_view field, std::string_view what) {
    throw Error(ErrorCode::kSchemaViolation, fmt::format("field '{}': {}", field, what));
  };
  json j;
  try {
    j = json::parse(body);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kSchemaViolation, e.what());
  }
  if (!j.is_object()) bad("body", "expected a JSON object");
  BackendRequest r;
  auto q = j.find("question");
  if (q == j.end() || !q->is_string()) bad("question", "missing or not a string");
  r.question = q->get<std::string>();
  if (auto p = j.find("passages"); p != j.end()) {
    if (!p->is_array()) bad("passages", "expected an array of strings");
    for (const json& e : *p) {
      if (!e.is_string()) bad("passages", "expected an array of strings");
      r.passages.push_back(e.get<std::string>());
    }
  }
  if (auto m = j.find("max_new_tokens"); m != j.end()) {
    if (!m->is_number_integer() || m->get<long long>() < 1) {
      bad("max_new_tokens", "expected a positive integer");
    }
    r.max_new_tokens = static_cast<int>(m->get<long long>());
  }
  return r;
}

std::string serialize_backend_response(const BackendResponse& response) {
  nlohmann::ordered_json j;
  j["prediction"] = response.prediction;
  j["token_probs"] = response.token_probs;
  return j.dump();
}

BackendResponse parse_backend_response(std::string_view body) {
  auto bad = [](std::string_view what) {
    throw Error(ErrorCode::kMalformedBackendResponse, std::string(what));
  };
  json j;
  try {
    j = json::parse(body);
  } catch (const json::parse_error& e) {
    bad(e.what());
  }
  if (!j.is_object()) bad("response is not a JSON object");
  BackendResponse r;
  auto pred = j.find("prediction");
  if (pred == j.end() || !pred->is_string()) bad("'prediction' missing or not a string");
  r.prediction = pred->get<std::string>();
  auto probs = j.find("token_probs");
  if (probs == j.end() || !probs->is_array() || probs->empty()) {
    bad("'token_probs' missing or not a non-empty array");
  }
  for (const json& p : *probs) {
    if (!p.is_number()) bad("'token_probs' holds a non-number");
    const double v = p.get<double>();
    if (!(v > 0.0 && v <= 1.0)) bad(fmt::format("token probability {} outside (0, 1]", v));
    r.token_probs.push_back(v);
  }
  return r;
}

HttpBackend::HttpBackend(std::string base_url, double timeout_seconds)
    : base_url_(std::move(base_url)), timeout_seconds_(timeout_seconds) {}

BackendResponse HttpBackend::predict(const BackendRequest& request) {
  httplib::Client client(base_url_);
  if (!client.is_valid()) {
    throw Error(ErrorCode::kBackendUnreachable,
                fmt::format("{}: invalid backend URL", base_url_));
  }
  const auto timeout = std::chrono::duration_cast<std::chrono::microseconds>(
      std::chrono::duration<double>(timeout_seconds_));
  client.set_connection_timeout(timeout);
  client.set_read_timeout(timeout);
  client.set_write_timeout(timeout);

  auto res = client.Post(std::string(kPredictPath), serialize_backend_request(request),
                         "application/json");
  if (!res) {
    throw Error(ErrorCode::kBackendUnreachable,
                fmt::format("{}: {}", base_url_, httplib::to_string(res.error())));
  }
  if (res->status != 200) {
    throw Error(ErrorCode::kMalformedBackendResponse,
                fmt::format("{}: HTTP status {}", base_url_, res->status));
  }
  try {
    return parse_backend_response(res->body);
  } catch (const Error& e) {
    throw Error(e.code(), fmt::format("{}: {}", base_url_, e.detail()));
  }
}

ReplayBackend::ReplayBackend(const PredictionLog& logs, std::string_view stage) {
  const auto* records = logs.stage(stage);
  if (records == nullptr) return;
  for (const auto& [qid, r] : *records) {
    BackendResponse resp;
    resp.prediction = r.prediction;
    resp.token_probs.assign(r.token_probs.values().begin(), r.token_probs.values().end());
    by_question_.emplace(r.question, std::move(resp));
  }
}

BackendResponse ReplayBackend::predict(const BackendRequest& request) {
  auto it = by_question_.find(request.question);
  if (it == by_question_.end()) {
    throw Error(ErrorCode::kMalformedBackendResponse,
                fmt::format("no replay record for question '{}'", request.question));
  }
  return it->second;
}

struct BackendServer::Impl {
  httplib::Server server;
  std::shared_ptr<StageBackend> backend;
};

BackendServer::BackendServer(std::shared_ptr<StageBackend> backend)
    : impl_(std::make_unique<Impl>()) {
  impl_->backend = std::move(backend);
  impl_->server.Post(std::string(kPredictPath),
                     [impl = impl_.get()](const httplib::Request& req,
                                          httplib::Response& res) {
                       BackendRequest request;
                       try {
                         request = parse_backend_request(req.body);
                       } catch (const Error& e) {
                         res.status = 400;
                         res.set_content(json{{"error", e.what()}}.dump(),
                                         "application/json");
                         return;
                       }
                       try {
                         res.set_content(serialize_backend_response(
                                             impl->backend->predict(request)),
                                         "application/json");
                       } catch (const std::exception& e) {
                         res.status = 500;
                         res.set_content(json{{"error", e.what()}}.dump(),
                                         "application/json");
                       }
                     });
  port_ = impl_->server.bind_to_any_port("127.0.0.1");
  if (port_ <= 0) {
    throw Error(ErrorCode::kIoError, "could not bind a local port");
  }
  thread_ = std::thread([impl = impl_.get()] { impl->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
}

BackendServer::~BackendServer() { stop(); }

std::string BackendServer::url() const {
  return fmt::format("http://127.0.0.1:{}", port_);
}

void BackendServer::stop() {
  if (thread_.joinable()) {
    impl_->server.stop();
    thread_.join();
  }
}

}  // namespace qcascade
