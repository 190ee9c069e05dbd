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

#include <memory>
#include <string>
#include <thread>
#include <vector>

#include "gtest/gtest.h"
#include "httplib.h"
#include "qcascade/error.h"
#include "qcascade/synth.h"
#include "test_util.h"

namespace qcascade {
namespace {

using ::qcascade::testing::cb_stage;
using ::qcascade::testing::make_record;
using ::qcascade::testing::ob_stage;

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected qcascade::Error";
  return ErrorCode::kIoError;
}

class EchoBackend : public StageBackend {
 public:
  BackendResponse predict(const BackendRequest& request) override {
    return BackendResponse{request.question + "/" + std::to_string(request.passages.size()) +
                               "/" + std::to_string(request.max_new_tokens),
                           {0.5, 0.25}};
  }
};

class ThrowingBackend : public StageBackend {
 public:
  BackendResponse predict(const BackendRequest&) override {
    throw Error(ErrorCode::kInvalidInput, "model crashed");
  }
};

class RawServer {
 public:
  explicit RawServer(std::string body, int status = 200) {
    server_.Post(std::string(kPredictPath),
                 [body, status](const httplib::Request&, httplib::Response& res) {
                   res.status = status;
                   res.set_content(body, "application/json");
                 });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~RawServer() {
    server_.stop();
    thread_.join();
  }
  std::string url() const { return "http://127.0.0.1:" + std::to_string(port_); }

 private:
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
};

TEST(WireFormat, RequestRoundTrip) {
  const BackendRequest r{"who wrote it?", {"p1", "p\"2"}, 16};
  EXPECT_EQ(R"({"question":"who wrote it?","passages":["p1","p\"2"],"max_new_tokens":16})",
            serialize_backend_request(r));
  const BackendRequest back = parse_backend_request(serialize_backend_request(r));
  EXPECT_EQ(r.question, back.question);
  EXPECT_EQ(r.passages, back.passages);
  EXPECT_EQ(16, back.max_new_tokens);
  EXPECT_TRUE(parse_backend_request(R"({"question":"q","passages":[]})").passages.empty());
}

TEST(WireFormat, RequestSchemaViolations) {
  EXPECT_EQ(ErrorCode::kSchemaViolation, code_of([] { parse_backend_request("{}"); }));
  EXPECT_EQ(ErrorCode::kSchemaViolation,
            code_of([] { parse_backend_request(R"({"question":"q","passages":[1]})"); }));
  EXPECT_EQ(ErrorCode::kSchemaViolation, code_of([] { parse_backend_request("nope"); }));
}

TEST(WireFormat, ResponseRoundTripAndValidation) {
  const BackendResponse r{"Ann", {0.9, 0.5}};
  const BackendResponse back = parse_backend_response(serialize_backend_response(r));
  EXPECT_EQ(r.prediction, back.prediction);
  EXPECT_EQ(r.token_probs, back.token_probs);
  for (const char* body : {R"({"prediction":"x"})", R"({"prediction":"x","token_probs":[]})",
                           R"({"prediction":"x","token_probs":[0]})",
                           R"({"prediction":"x","token_probs":[1.2]})",
                           R"({"token_probs":[0.5]})", "[]", "{"}) {
    EXPECT_EQ(ErrorCode::kMalformedBackendResponse, code_of([&] { parse_backend_response(body); }))
        << body;
  }
}

TEST(BackendServer, ServesTheWireContract) {
  BackendServer server(std::make_shared<EchoBackend>());
  HttpBackend client(server.url(), 5.0);
  const BackendResponse r = client.predict(BackendRequest{"q?", {"a", "b", "c"}, 7});
  EXPECT_EQ("q?/3/7", r.prediction);
  EXPECT_EQ((std::vector<double>{0.5, 0.25}), r.token_probs);
}

TEST(BackendServer, MissingQuestionIs400) {
  BackendServer server(std::make_shared<EchoBackend>());
  httplib::Client raw(server.url());
  const auto res = raw.Post(std::string(kPredictPath), R"({"passages":[]})", "application/json");
  ASSERT_TRUE(res);
  EXPECT_EQ(400, res->status);
}

TEST(BackendServer, BackendFailureIs500AndMalformedForTheClient) {
  BackendServer server(std::make_shared<ThrowingBackend>());
  httplib::Client raw(server.url());
  const auto res = raw.Post(std::string(kPredictPath), R"({"question":"q"})", "application/json");
  ASSERT_TRUE(res);
  EXPECT_EQ(500, res->status);
  HttpBackend client(server.url(), 5.0);
  EXPECT_EQ(ErrorCode::kMalformedBackendResponse,
            code_of([&] { client.predict(BackendRequest{"q", {}, 4}); }));
}

TEST(HttpBackend, SchemaViolationsInResponses) {
  RawServer server(R"({"prediction":"x","token_probs":[2.0]})");
  HttpBackend client(server.url(), 5.0);
  EXPECT_EQ(ErrorCode::kMalformedBackendResponse,
            code_of([&] { client.predict(BackendRequest{"q", {}, 4}); }));
}

TEST(HttpBackend, UnreachableBackend) {
  std::string url;
  {
    BackendServer server(std::make_shared<EchoBackend>());
    url = server.url();
  }
  HttpBackend client(url, 2.0);
  EXPECT_EQ(ErrorCode::kBackendUnreachable,
            code_of([&] { client.predict(BackendRequest{"q", {}, 4}); }));
  HttpBackend nonsense("not a url at all", 1.0);
  EXPECT_EQ(ErrorCode::kBackendUnreachable,
            code_of([&] { nonsense.predict(BackendRequest{"q", {}, 4}); }));
}

TEST(ReplayBackend, AnswersByQuestionText) {
  PredictionLog logs;
  logs.add(make_record("a", "cb", {0.7, 0.2}, 0, "Ann", {"Ann"}, "who?"));
  ReplayBackend replay(logs, "cb");
  const BackendResponse r = replay.predict(BackendRequest{"who?", {}, 4});
  EXPECT_EQ("Ann", r.prediction);
  EXPECT_EQ((std::vector<double>{0.7, 0.2}), r.token_probs);
  EXPECT_EQ(ErrorCode::kMalformedBackendResponse,
            code_of([&] { replay.predict(BackendRequest{"what?", {}, 4}); }));
}

TEST(RunLive, OverHttpMatchesOffline) {
  SynthConfig c;
  c.n_questions = 60;
  c.seed = 11;
  c.stages = {{"cb", 0, 0.4}, {"ob5", 5, 0.6}, {"ob10", 10, 0.8}};
  const PredictionLog logs = generate(c);
  CascadePolicy policy;
  policy.stages = {cb_stage("cb", 0.6), ob_stage("ob5", 5, 0.5), ob_stage("ob10", 10)};
  policy.cost = CostModel(3.0, 2.0, CostMode::kEncoderReuse);

  std::vector<std::unique_ptr<BackendServer>> servers;
  std::vector<std::unique_ptr<HttpBackend>> clients;
  std::vector<StageBackend*> backends;
  for (const StageSpec& s : policy.stages) {
    servers.push_back(std::make_unique<BackendServer>(std::make_shared<ReplayBackend>(logs, s.name)));
    clients.push_back(std::make_unique<HttpBackend>(servers.back()->url(), 5.0));
    backends.push_back(clients.back().get());
  }
  std::vector<LiveQuestion> questions;
  for (const auto& [qid, r] : *logs.stage("cb")) {
    questions.push_back(LiveQuestion{qid, r.question, std::vector<std::string>(12, "p"), r.gold});
  }
  const LiveResult live = run_live(backends, policy, questions, LiveOptions{32, 4});
  EXPECT_TRUE(live.failures.empty());
  EXPECT_EQ(run_offline(logs, policy), live.outcomes);
}

}  // namespace
}  // namespace qcascade
