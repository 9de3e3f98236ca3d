#include "vpr/gateway.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <future>
#include <random>
#include <thread>

#include <json.hpp>

#include "vpr/error.hpp"

namespace vpr {

using nlohmann::json;

void ModelConfig::validate() const {
  if (!std::isfinite(temperature) || temperature < 0.0) {
    throw Error(ErrorCode::InvalidConfig, "temperature must be finite and >= 0");
  }
  if (max_concurrency < 1 || max_concurrency > 4096) {
    throw Error(ErrorCode::InvalidConfig, "max_concurrency must be in [1, 4096]");
  }
  if (max_retries < 0) throw Error(ErrorCode::InvalidConfig, "max_retries must be >= 0");
  if (!(request_timeout.count() > 0.0)) throw Error(ErrorCode::InvalidConfig, "request timeout must be positive");
}

Seconds BackoffPolicy::delay(int retry, double u) const {
  const double raw = std::min(cap.count(), base.count() * std::ldexp(1.0, std::min(retry, 30)));
  return Seconds(raw * (1.0 + jitter * std::clamp(u, -1.0, 1.0)));
}

namespace {

bool retryable(int status) { return status == 0 || status == 429 || (status >= 500 && status <= 599); }

double jitter_draw() {
  thread_local std::mt19937_64 rng{std::random_device{}()};
  return std::uniform_real_distribution<double>(-1.0, 1.0)(rng);
}

class InFlightGuard {
 public:
  InFlightGuard(std::counting_semaphore<1 << 16>& sem, std::atomic<int>& in_flight, std::atomic<int>& max_seen)
      : sem_(sem), in_flight_(in_flight) {
    sem_.acquire();
    const int now = ++in_flight_;
    int seen = max_seen.load();
    while (now > seen && !max_seen.compare_exchange_weak(seen, now)) {
    }
  }
  ~InFlightGuard() {
    --in_flight_;
    sem_.release();
  }
  InFlightGuard(const InFlightGuard&) = delete;
  InFlightGuard& operator=(const InFlightGuard&) = delete;

 private:
  std::counting_semaphore<1 << 16>& sem_;
  std::atomic<int>& in_flight_;
};

}  // namespace

Gateway::Gateway(std::shared_ptr<Transport> transport, ModelConfig cfg, BackoffPolicy backoff, Sleeper sleeper)
    : transport_(std::move(transport)),
      cfg_(std::move(cfg)),
      backoff_(backoff),
      sleeper_(sleeper ? std::move(sleeper) : Sleeper([](Seconds d) { std::this_thread::sleep_for(d); })),
      admission_(std::max(1, cfg_.max_concurrency)) {
  cfg_.validate();
  if (!transport_) throw Error(ErrorCode::InvalidConfig, "gateway needs a transport");
}

std::string Gateway::request_body(const MessageSequence& messages, double temperature) const {
  return json{{"model", cfg_.model_name}, {"temperature", temperature}, {"messages", to_wire(messages)}}.dump();
}

HttpReply Gateway::send_once(const HttpRequest& request) {
  InFlightGuard guard(admission_, in_flight_, max_in_flight_);
  ++requests_sent_;
  return transport_->post(request);
}

RawResponse Gateway::complete(const MessageSequence& messages, const CallOptions& options, int sample_index) {
  const double temperature = options.temperature.value_or(cfg_.temperature);
  if (!std::isfinite(temperature) || temperature < 0.0) {
    throw Error(ErrorCode::InvalidConfig, "temperature must be finite and >= 0");
  }

  HttpRequest request;
  std::string base = cfg_.endpoint_url;
  while (!base.empty() && base.back() == '/') base.pop_back();
  request.url = base + "/chat/completions";
  request.headers.emplace_back("Content-Type", "application/json");
  if (const char* key = std::getenv("MLLM_API_KEY"); key != nullptr && *key != '\0') {
    request.headers.emplace_back("Authorization", std::string("Bearer ") + key);
  }
  request.body = request_body(messages, temperature);
  request.timeout = cfg_.request_timeout;
  request.pair = options.pair;
  request.sample_index = sample_index;

  const auto started = std::chrono::steady_clock::now();
  double simulated = 0.0;
  bool all_simulated = true;
  std::string last_failure;

  for (int attempt = 0; attempt <= cfg_.max_retries; ++attempt) {
    if (attempt > 0) sleeper_(backoff_.delay(attempt - 1, jitter_draw()));

    HttpReply reply = send_once(request);
    if (reply.simulated_latency_s) {
      simulated += *reply.simulated_latency_s;
    } else {
      all_simulated = false;
    }

    if (reply.status == 401 || reply.status == 403) {
      throw Error(ErrorCode::AuthError, "HTTP " + std::to_string(reply.status) + " from " + request.url);
    }
    if (retryable(reply.status)) {
      last_failure = reply.status == 0 ? (reply.error.empty() ? "no response" : reply.error)
                                       : "HTTP " + std::to_string(reply.status);
      continue;
    }
    if (reply.status < 200 || reply.status > 299) {
      throw Error(ErrorCode::TransportError, "HTTP " + std::to_string(reply.status) + " from " + request.url);
    }

    json doc = json::parse(reply.body, nullptr, false);
    const json* content = nullptr;
    if (doc.is_object() && doc.contains("choices") && doc["choices"].is_array() && !doc["choices"].empty()) {
      const auto& choice = doc["choices"][0];
      if (choice.is_object() && choice.contains("message") && choice["message"].is_object() &&
          choice["message"].contains("content") && choice["message"]["content"].is_string()) {
        content = &choice["message"]["content"];
      }
    }
    if (content == nullptr) throw Error(ErrorCode::ProtocolError, "reply lacks choices[0].message.content");

    RawResponse response;
    response.sample_index = sample_index;
    response.text = content->get<std::string>();
    if (doc.contains("usage") && doc["usage"].is_object()) {
      const auto& usage = doc["usage"];
      if (usage.contains("completion_tokens") && usage["completion_tokens"].is_number_integer()) {
        response.output_tokens = std::max(0, usage["completion_tokens"].get<int>());
      }
    }
    response.latency_s =
        all_simulated ? simulated : Seconds(std::chrono::steady_clock::now() - started).count();
    return response;
  }
  throw Error(ErrorCode::TransportError,
              "gave up after " + std::to_string(cfg_.max_retries + 1) + " attempts: " + last_failure);
}

std::vector<RawResponse> Gateway::sample_n(const MessageSequence& messages, int n, const CallOptions& options) {
  if (n < 1) throw Error(ErrorCode::InvalidConfig, "sample count must be >= 1");

  std::vector<RawResponse> out(static_cast<std::size_t>(n));
  std::vector<std::exception_ptr> auth_failures(out.size());
  auto run = [&](int index) {
    try {
      out[static_cast<std::size_t>(index)] = complete(messages, options, index);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::AuthError) {
        auth_failures[static_cast<std::size_t>(index)] = std::current_exception();
        return;
      }
      RawResponse failed;
      failed.sample_index = index;
      failed.ok = false;
      failed.failure_reason = e.what();
      out[static_cast<std::size_t>(index)] = std::move(failed);
    }
  };

  if (n == 1 || cfg_.max_concurrency == 1) {
    for (int i = 0; i < n; ++i) run(i);
  } else {
    std::vector<std::future<void>> pending;
    pending.reserve(out.size());
    for (int i = 0; i < n; ++i) pending.push_back(std::async(std::launch::async, run, i));
    for (auto& f : pending) f.get();
  }

  for (const auto& failure : auth_failures) {
    if (failure) std::rethrow_exception(failure);
  }
  return out;
}

}  // namespace vpr
