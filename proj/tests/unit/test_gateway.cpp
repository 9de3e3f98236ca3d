#include <chrono>
#include <cstdlib>
#include <deque>
#include <mutex>
#include <random>
#include <thread>

#include <httplib.h>

#include "unit_helpers.hpp"
#include "vpr/gateway.hpp"
#include "vpr/mock_model.hpp"

using namespace vpr;

namespace {

// Replies from a per-sample script; the last entry repeats once the script runs out.
class ScriptedTransport final : public Transport {
 public:
  explicit ScriptedTransport(std::vector<HttpReply> script) : script_(std::move(script)) {}

  HttpReply post(const HttpRequest& request) override {
    std::lock_guard lock(mu_);
    requests.push_back(request);
    const auto i = std::min(next_++, script_.size() - 1);
    return script_[i];
  }

  std::vector<HttpRequest> requests;

 private:
  std::mutex mu_;
  std::vector<HttpReply> script_;
  std::size_t next_ = 0;
};

HttpReply ok_reply(const std::string& text, int tokens = 7) {
  HttpReply r;
  r.status = 200;
  r.body = completion_body(text, tokens);
  r.simulated_latency_s = 0.25;
  return r;
}

HttpReply status_reply(int status) {
  HttpReply r;
  r.status = status;
  r.simulated_latency_s = 0.5;
  return r;
}

MessageSequence sample_messages() {
  MessageSequence seq;
  seq.messages.push_back({Role::system, {TextPart{"sys"}}});
  seq.messages.push_back({Role::user, {TextPart{"rate"}, ImagePayload{"image/png", "AA=="}, ImagePayload{"image/png", "AQ=="}}});
  return seq;
}

ModelConfig model(int retries = 3, int concurrency = 4) {
  return ModelConfig{"http://model.local/v1/", "m", 0.7, Seconds(2.0), retries, concurrency};
}

struct SleepLog {
  std::vector<double> delays;
  std::mutex mu;
  Sleeper sleeper() {
    return [this](Seconds d) {
      std::lock_guard lock(mu);
      delays.push_back(d.count());
    };
  }
};

}  // namespace

TEST(Backoff, DoublesUpToCapWithBoundedJitter) {
  const BackoffPolicy p;
  EXPECT_EQ(p.delay(0, 0.0).count(), 1.0);
  EXPECT_EQ(p.delay(1, 0.0).count(), 2.0);
  EXPECT_EQ(p.delay(2, 0.0).count(), 4.0);
  EXPECT_EQ(p.delay(3, 0.0).count(), 8.0);
  EXPECT_EQ(p.delay(9, 0.0).count(), 8.0);
  EXPECT_NEAR(p.delay(1, 1.0).count(), 2.4, 1e-12);
  EXPECT_NEAR(p.delay(1, -1.0).count(), 1.6, 1e-12);
}

TEST(Gateway, RequestShape) {
  auto t = std::make_shared<ScriptedTransport>(std::vector{ok_reply("hello")});
  Gateway g(t, model());
  CallOptions opts;
  opts.temperature = 0.0;
  opts.pair = {"q", "c", 12.5};
  const auto r = g.complete(sample_messages(), opts, 3);
  EXPECT_EQ(r.text, "hello");
  EXPECT_EQ(r.output_tokens, 7);
  EXPECT_EQ(r.sample_index, 3);
  EXPECT_EQ(r.latency_s, 0.25);
  ASSERT_EQ(t->requests.size(), 1u);
  const auto& req = t->requests[0];
  EXPECT_EQ(req.url, "http://model.local/v1/chat/completions");
  EXPECT_EQ(req.pair.candidate_id, "c");
  const auto body = nlohmann::json::parse(req.body);
  EXPECT_EQ(body["model"], "m");
  EXPECT_EQ(body["temperature"], 0.0);
  EXPECT_EQ(body["messages"][1]["content"][2]["image_url"]["url"], "data:image/png;base64,AQ==");
}

TEST(Gateway, RetriesRateLimitThenSucceeds) {
  auto t = std::make_shared<ScriptedTransport>(std::vector{status_reply(429), ok_reply("fine")});
  SleepLog log;
  Gateway g(t, model(), {}, log.sleeper());
  const auto r = g.complete(sample_messages());
  EXPECT_EQ(r.text, "fine");
  EXPECT_EQ(t->requests.size(), 2u);
  ASSERT_EQ(log.delays.size(), 1u);
  EXPECT_GE(log.delays[0], 0.8);
  EXPECT_LE(log.delays[0], 1.2);
  EXPECT_EQ(r.latency_s, 0.75);
}

TEST(Gateway, UnreachableExhaustsRetries) {
  HttpReply down;
  down.error = "Connection";
  auto t = std::make_shared<ScriptedTransport>(std::vector{down});
  SleepLog log;
  Gateway g(t, model(3), {}, log.sleeper());
  EXPECT_VPR_ERROR(g.complete(sample_messages()), ErrorCode::TransportError);
  EXPECT_EQ(t->requests.size(), 4u);
  ASSERT_EQ(log.delays.size(), 3u);
  EXPECT_LE(log.delays[2], 4.8);
  EXPECT_GE(log.delays[2], 3.2);
}

TEST(Gateway, ServerErrorsRetriedButOtherStatusesAreNot) {
  {
    auto t = std::make_shared<ScriptedTransport>(std::vector{status_reply(503), status_reply(500), ok_reply("x")});
    SleepLog log;
    Gateway g(t, model(), {}, log.sleeper());
    EXPECT_EQ(g.complete(sample_messages()).text, "x");
    EXPECT_EQ(t->requests.size(), 3u);
  }
  {
    auto t = std::make_shared<ScriptedTransport>(std::vector{status_reply(400)});
    SleepLog log;
    Gateway g(t, model(), {}, log.sleeper());
    EXPECT_VPR_ERROR(g.complete(sample_messages()), ErrorCode::TransportError);
    EXPECT_EQ(t->requests.size(), 1u);
  }
}

TEST(Gateway, AuthFailuresAreNeverRetried) {
  for (int status : {401, 403}) {
    auto t = std::make_shared<ScriptedTransport>(std::vector{status_reply(status), ok_reply("x")});
    SleepLog log;
    Gateway g(t, model(), {}, log.sleeper());
    EXPECT_VPR_ERROR(g.complete(sample_messages()), ErrorCode::AuthError);
    EXPECT_EQ(t->requests.size(), 1u);
    EXPECT_TRUE(log.delays.empty());
  }
}

TEST(Gateway, MalformedBodyIsProtocolError) {
  HttpReply r;
  r.status = 200;
  r.body = R"({"choices": []})";
  auto t = std::make_shared<ScriptedTransport>(std::vector{r});
  Gateway g(t, model());
  EXPECT_VPR_ERROR(g.complete(sample_messages()), ErrorCode::ProtocolError);
}

TEST(Gateway, ConfigValidation) {
  auto t = std::make_shared<ScriptedTransport>(std::vector{ok_reply("x")});
  auto bad = model();
  bad.max_concurrency = 0;
  EXPECT_VPR_ERROR(Gateway(t, bad), ErrorCode::InvalidConfig);
  bad = model();
  bad.temperature = -1;
  EXPECT_VPR_ERROR(Gateway(t, bad), ErrorCode::InvalidConfig);
  Gateway g(t, model());
  EXPECT_VPR_ERROR(g.sample_n(sample_messages(), 0), ErrorCode::InvalidConfig);
}

TEST(Gateway, BearerTokenFromEnvironment) {
  auto t = std::make_shared<ScriptedTransport>(std::vector{ok_reply("x")});
  Gateway g(t, model());
  ::setenv("MLLM_API_KEY", "sk-test", 1);
  g.complete(sample_messages());
  ::unsetenv("MLLM_API_KEY");
  g.complete(sample_messages());
  auto has_auth = [](const HttpRequest& r) {
    for (const auto& [k, v] : r.headers) {
      if (k == "Authorization") return v == "Bearer sk-test";
    }
    return false;
  };
  EXPECT_TRUE(has_auth(t->requests[0]));
  EXPECT_FALSE(has_auth(t->requests[1]));
}

TEST(SampleN, FiveSamplesFromMockInIndexOrder) {
  MockConfig cfg;
  cfg.seed = 5;
  auto t = std::make_shared<MockTransport>(cfg);
  Gateway g(t, model());
  CallOptions opts;
  opts.pair = {"q", "c", 30.0};
  const auto out = g.sample_n(sample_messages(), 5, opts);
  ASSERT_EQ(out.size(), 5u);
  for (int i = 0; i < 5; ++i) {
    EXPECT_EQ(out[i].sample_index, i);
    EXPECT_TRUE(out[i].ok);
    EXPECT_EQ(out[i].text, mock_complete(opts.pair, i, cfg));
  }
  EXPECT_EQ(t->calls(), 5);
}

TEST(SampleN, SingleSampleEqualsComplete) {
  auto t = std::make_shared<MockTransport>(MockConfig{});
  Gateway g(t, model());
  CallOptions opts;
  opts.pair = {"q", "c", 10.0};
  const auto one = g.sample_n(sample_messages(), 1, opts);
  const auto direct = g.complete(sample_messages(), opts, 0);
  ASSERT_EQ(one.size(), 1u);
  EXPECT_EQ(one[0].text, direct.text);
  EXPECT_EQ(one[0].latency_s, direct.latency_s);
  EXPECT_EQ(one[0].output_tokens, direct.output_tokens);
}

namespace {

// Sample 2 never answers; the others reply with their index after a random delay.
class FlakyTransport final : public Transport {
 public:
  HttpReply post(const HttpRequest& request) override {
    thread_local std::mt19937 rng{std::random_device{}()};
    std::this_thread::sleep_for(std::chrono::milliseconds(rng() % 15));
    if (request.sample_index == 2) {
      HttpReply r;
      r.error = "Read";
      return r;
    }
    return ok_reply("sample " + std::to_string(request.sample_index));
  }
};

}  // namespace

TEST(SampleN, OrderIndependentOfTimingAndFailuresKeepTheirSlot) {
  SleepLog log;
  Gateway g(std::make_shared<FlakyTransport>(), model(1, 5), {}, log.sleeper());
  for (int round = 0; round < 10; ++round) {
    const auto out = g.sample_n(sample_messages(), 5);
    ASSERT_EQ(out.size(), 5u);
    for (int i = 0; i < 5; ++i) {
      EXPECT_EQ(out[i].sample_index, i);
      if (i == 2) {
        EXPECT_FALSE(out[i].ok);
        EXPECT_NE(out[i].failure_reason.find("TransportError"), std::string::npos);
      } else {
        EXPECT_TRUE(out[i].ok);
        EXPECT_EQ(out[i].text, "sample " + std::to_string(i));
      }
    }
  }
}

TEST(SampleN, AuthErrorPropagates) {
  auto t = std::make_shared<ScriptedTransport>(std::vector{status_reply(401)});
  Gateway g(t, model());
  EXPECT_VPR_ERROR(g.sample_n(sample_messages(), 5), ErrorCode::AuthError);
}

TEST(SampleN, ConcurrencyCapHolds) {
  auto t = std::make_shared<MockTransport>(MockConfig{}, 20);
  Gateway g(t, model(0, 2));
  std::vector<std::thread> callers;
  for (int c = 0; c < 3; ++c) callers.emplace_back([&] { g.sample_n(sample_messages(), 6); });
  for (auto& th : callers) th.join();
  EXPECT_EQ(g.requests_sent(), 18);
  EXPECT_LE(g.max_observed_in_flight(), 2);
  EXPECT_GE(g.max_observed_in_flight(), 1);
}

TEST(HttpTransportTest, TalksToLocalServer) {
  httplib::Server server;
  std::string seen_auth, seen_body;
  std::atomic<int> hits{0};
  server.Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
    if (hits++ == 0) {
      res.status = 503;
      return;
    }
    seen_auth = req.get_header_value("Authorization");
    seen_body = req.body;
    res.set_content(completion_body("{\"similarity_score\": 0.5}", 4), "application/json");
  });
  const int port = server.bind_to_any_port("127.0.0.1");
  ASSERT_GT(port, 0);
  std::thread loop([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  ::setenv("MLLM_API_KEY", "sk-local", 1);
  ModelConfig cfg{"http://127.0.0.1:" + std::to_string(port) + "/v1", "local", 0.0, Seconds(5.0), 2, 1};
  SleepLog log;
  Gateway g(std::make_shared<HttpTransport>(), cfg, {}, log.sleeper());
  const auto r = g.complete(sample_messages());
  ::unsetenv("MLLM_API_KEY");
  server.stop();
  loop.join();

  EXPECT_EQ(r.text, "{\"similarity_score\": 0.5}");
  EXPECT_EQ(r.output_tokens, 4);
  EXPECT_EQ(hits.load(), 2);
  EXPECT_EQ(seen_auth, "Bearer sk-local");
  EXPECT_EQ(nlohmann::json::parse(seen_body)["model"], "local");
}

TEST(HttpTransportTest, UnreachableEndpoint) {
  // Port 9 on loopback has no listener in the test environment.
  ModelConfig cfg{"http://127.0.0.1:9", "x", 0.0, Seconds(1.0), 1, 1};
  SleepLog log;
  Gateway g(std::make_shared<HttpTransport>(), cfg, {}, log.sleeper());
  EXPECT_VPR_ERROR(g.complete(sample_messages()), ErrorCode::TransportError);
  EXPECT_EQ(log.delays.size(), 1u);
}
