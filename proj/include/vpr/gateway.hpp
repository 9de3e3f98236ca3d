#pragma once

#include <atomic>
#include <chrono>
#include <functional>
#include <memory>
#include <optional>
#include <semaphore>
#include <string>
#include <utility>
#include <vector>

#include "vpr/prompting.hpp"

namespace vpr {

using Seconds = std::chrono::duration<double>;

struct ModelConfig {
  std::string endpoint_url;
  std::string model_name;
  double temperature = 0.7;
  Seconds request_timeout{120.0};
  int max_retries = 3;
  int max_concurrency = 4;

  void validate() const;  // InvalidConfig
};

// Identifies the image pair behind a request. Real endpoints never see it; the
// mock model derives its verdict from it.
struct PairContext {
  std::string query_id;
  std::string candidate_id;
  double distance_m = 0.0;
};

struct HttpRequest {
  std::string url;
  std::vector<std::pair<std::string, std::string>> headers;
  std::string body;
  Seconds timeout{120.0};
  PairContext pair;
  int sample_index = 0;
};

struct HttpReply {
  int status = 0;  // 0: no HTTP response (connect failure, timeout)
  std::string body;
  std::string error;
  // Set by simulated transports so that recorded latencies stay reproducible.
  std::optional<double> simulated_latency_s;
};

class Transport {
 public:
  virtual ~Transport() = default;
  virtual HttpReply post(const HttpRequest& request) = 0;
};

// Plain HTTP(S) transport over cpp-httplib.
class HttpTransport final : public Transport {
 public:
  HttpReply post(const HttpRequest& request) override;
};

struct BackoffPolicy {
  Seconds base{1.0};
  Seconds cap{8.0};
  double jitter = 0.2;  // +/- fraction applied to each delay

  // Delay before retry number `retry` (0-based) with jitter factor u in [-1, 1].
  Seconds delay(int retry, double u) const;
};

using Sleeper = std::function<void(Seconds)>;

struct RawResponse {
  int sample_index = 0;
  std::string text;
  double latency_s = 0.0;
  int output_tokens = 0;
  bool ok = true;
  std::string failure_reason;  // set when !ok
};

struct CallOptions {
  std::optional<double> temperature;  // defaults to ModelConfig::temperature
  PairContext pair;
};

// Chat-completions client shared by all scoring threads. At most
// ModelConfig::max_concurrency requests are in flight at any time.
class Gateway {
 public:
  Gateway(std::shared_ptr<Transport> transport, ModelConfig cfg, BackoffPolicy backoff = {}, Sleeper sleeper = {});

  // First choice's content verbatim. Retries network failures, 429 and 5xx with
  // exponential backoff. Throws TransportError, ProtocolError or AuthError (never retried).
  RawResponse complete(const MessageSequence& messages, const CallOptions& options = {}, int sample_index = 0);

  // n samples ordered by sample_index. A failed sample is reported with ok=false
  // instead of failing the batch; AuthError still propagates.
  std::vector<RawResponse> sample_n(const MessageSequence& messages, int n, const CallOptions& options = {});

  const ModelConfig& config() const { return cfg_; }
  std::string request_body(const MessageSequence& messages, double temperature) const;

  long requests_sent() const { return requests_sent_.load(); }
  int max_observed_in_flight() const { return max_in_flight_.load(); }

 private:
  HttpReply send_once(const HttpRequest& request);

  std::shared_ptr<Transport> transport_;
  ModelConfig cfg_;
  BackoffPolicy backoff_;
  Sleeper sleeper_;
  std::counting_semaphore<1 << 16> admission_;
  std::atomic<long> requests_sent_{0};
  std::atomic<int> in_flight_{0};
  std::atomic<int> max_in_flight_{0};
};

}  // namespace vpr
