#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "dockd/errors.hpp"

namespace dockd {

struct GenerationRequest {
  std::string prompt;
  int max_tokens = 512;
  double temperature = 0.7;
  std::vector<std::string> stop_sequences;
  std::string request_id;
};

/// Throws ArgumentError on an empty prompt, max_tokens < 1, or a negative
/// temperature.
void validate(const GenerationRequest& req);

struct GenerationResponse {
  std::string request_id;
  std::string completion;
  std::string backend;
  std::int64_t latency_ms = 0;
  bool truncated = false;
};

enum class BackendKind { http, stub };

struct BackendConfig {
  BackendKind kind = BackendKind::stub;
  std::string endpoint_url;                   // http only
  std::string auth_env_var = "DOCKD_API_KEY";  // http only
  int max_concurrency = 4;
  int max_retries = 3;
  double timeout_s = 60.0;
  std::string replay_path;  // stub only
  /// Default generation budget for requests built by the pipeline.
  int max_tokens = 512;
  /// First retry delay; doubles on every further retry.
  double initial_backoff_s = 1.0;
};

void validate(const BackendConfig& cfg);
std::string to_string(BackendKind kind);
BackendKind backend_kind_from_string(const std::string& s);

/// A teacher model endpoint. Implementations must be safe to call from
/// several threads at once.
class Backend {
 public:
  virtual ~Backend() = default;
  virtual GenerationResponse complete(const GenerationRequest& req) = 0;
  virtual std::string name() const = 0;
};

/// Deterministic replay backend keyed by SHA-256 of the full prompt. It also
/// records calls so tests can audit ordering and concurrency.
class StubBackend : public Backend {
 public:
  explicit StubBackend(std::map<std::string, std::string> completions_by_hash);

  /// JSON Lines of {"prompt_sha256": hex, "completion": str}.
  static std::shared_ptr<StubBackend> from_file(const std::filesystem::path& path);

  GenerationResponse complete(const GenerationRequest& req) override;
  std::string name() const override { return "stub"; }

  /// Holds each call open this long, so overlapping calls are observable.
  void set_latency(std::chrono::milliseconds latency) { latency_ = latency; }

  int peak_in_flight() const { return peak_.load(); }
  std::size_t call_count() const;
  /// Prompts in call-completion order.
  std::vector<std::string> prompts() const;
  void reset_instrumentation();

 private:
  std::map<std::string, std::string> completions_;
  std::chrono::milliseconds latency_{0};
  std::atomic<int> in_flight_{0};
  std::atomic<int> peak_{0};
  mutable std::mutex log_mutex_;
  std::vector<std::string> prompts_;
};

/// POSTs {"prompt", "max_tokens", "temperature", "stop"} to the endpoint and
/// expects {"completion": str} back, optionally with "truncated" or
/// "finish_reason". Server errors (>= 500) and transport failures are retried
/// with exponential backoff; 401/403 raise AuthError at once; other 4xx raise
/// BackendError without retry.
class HttpBackend : public Backend {
 public:
  using Sleeper = std::function<void(std::chrono::milliseconds)>;

  explicit HttpBackend(BackendConfig cfg, Sleeper sleeper = {});

  GenerationResponse complete(const GenerationRequest& req) override;
  std::string name() const override { return "http"; }

  /// Retries performed by the most recent complete() on this thread.
  static int last_retry_count();

 private:
  BackendConfig cfg_;
  Sleeper sleeper_;
  std::string base_;  // scheme://host[:port]
  std::string path_;
};

enum class ErrorKind { backend, auth, replay_miss, argument };

struct ItemError {
  ErrorKind kind = ErrorKind::backend;
  std::string message;
};

struct BatchResult {
  std::string request_id;
  std::optional<GenerationResponse> response;
  std::optional<ItemError> error;

  bool ok() const { return response.has_value(); }
};

/// Runs fn(i) for i in [0, n) on at most `max_concurrency` worker threads.
/// fn must not throw.
void run_bounded(std::size_t n, int max_concurrency,
                 const std::function<void(std::size_t)>& fn);

class Client {
 public:
  /// Builds the backend named by cfg.kind (loading the replay file for stub).
  explicit Client(BackendConfig cfg);
  Client(std::shared_ptr<Backend> backend, BackendConfig cfg);

  GenerationResponse generate(const GenerationRequest& req) const;

  /// Responses in request order; at most max_concurrency requests in flight.
  /// A failing request becomes an item error and does not abort the batch.
  std::vector<BatchResult> generate_batch(
      const std::vector<GenerationRequest>& reqs) const;

  const BackendConfig& config() const { return cfg_; }
  Backend& backend() const { return *backend_; }

 private:
  std::shared_ptr<Backend> backend_;
  BackendConfig cfg_;
};

GenerationResponse generate(const GenerationRequest& req, const BackendConfig& cfg);
std::vector<BatchResult> generate_batch(const std::vector<GenerationRequest>& reqs,
                                        const BackendConfig& cfg);

/// Replay-file line for `prompt`.
std::string replay_line(const std::string& prompt, const std::string& completion);

}  // namespace dockd
