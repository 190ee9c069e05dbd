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

// Stage prediction services over HTTP.
//
// Each stage is served at POST /v1/predict:
//   request   {"question": "...", "passages": ["...", ...], "max_new_tokens": 32}
//   response  {"prediction": "...", "token_probs": [0.91, 0.87]}
// Closed-book stages receive an empty passage list.

#ifndef QCASCADE_HTTP_BACKEND_H_
#define QCASCADE_HTTP_BACKEND_H_

#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <thread>

#include "qcascade/cascade.h"
#include "qcascade/prediction.h"

namespace qcascade {

inline constexpr std::string_view kPredictPath = "/v1/predict";

std::string serialize_backend_request(const BackendRequest& request);
// Throws Error(kSchemaViolation) naming the bad field.
BackendRequest parse_backend_request(std::string_view body);

std::string serialize_backend_response(const BackendResponse& response);
// Throws Error(kMalformedBackendResponse) on bad JSON, missing fields or
// token_probs outside (0, 1].
BackendResponse parse_backend_response(std::string_view body);

// Client for one stage. `base_url` looks like "http://127.0.0.1:8080".
// Each call opens its own connection, so one instance may be shared across
// threads.
class HttpBackend : public StageBackend {
 public:
  explicit HttpBackend(std::string base_url, double timeout_seconds = 30.0);

  BackendResponse predict(const BackendRequest& request) override;

  const std::string& base_url() const { return base_url_; }

 private:
  std::string base_url_;
  double timeout_seconds_;
};

// In-process backend that answers from one stage of a prediction log,
// looked up by question text. Unknown questions raise
// Error(kMalformedBackendResponse).
class ReplayBackend : public StageBackend {
 public:
  ReplayBackend(const PredictionLog& logs, std::string_view stage);

  BackendResponse predict(const BackendRequest& request) override;

 private:
  std::map<std::string, BackendResponse, std::less<>> by_question_;
};

// Serves any StageBackend at POST /v1/predict on 127.0.0.1 from a background
// thread. Malformed requests get 400, backend failures 500.
class BackendServer {
 public:
  // Binds an ephemeral port; throws Error(kIoError) if that fails.
  explicit BackendServer(std::shared_ptr<StageBackend> backend);
  ~BackendServer();

  BackendServer(const BackendServer&) = delete;
  BackendServer& operator=(const BackendServer&) = delete;

  int port() const { return port_; }
  std::string url() const;
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  int port_ = 0;
  std::thread thread_;
};

}  // namespace qcascade

#endif  // QCASCADE_HTTP_BACKEND_H_
