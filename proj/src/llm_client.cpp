#include "dockd/llm_client.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "dockd/hash.hpp"

namespace dockd {
namespace {

using Clock = std::chrono::steady_clock;
using json = nlohmann::json;

thread_local int t_last_retries = 0;

std::int64_t elapsed_ms(Clock::time_point start) {
  return std::chrono::duration_cast<std::chrono::milliseconds>(Clock::now() - start)
      .count();
}

bool is_ws(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r'; }

// Applies stop sequences, then a whitespace-token budget. Returns true when
// the text was cut.
bool truncate(std::string& text, const GenerationRequest& req) {
  bool cut = false;
  std::size_t earliest = std::string::npos;
  for (const auto& stop : req.stop_sequences) {
    if (stop.empty()) continue;
    earliest = std::min(earliest, text.find(stop));
  }
  if (earliest != std::string::npos) {
    text.resize(earliest);
    cut = true;
  }
  int tokens = 0;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && is_ws(text[i])) ++i;
    if (i >= text.size()) break;
    if (tokens == req.max_tokens) {
      text.resize(i);
      while (!text.empty() && is_ws(text.back())) text.pop_back();
      return true;
    }
    ++tokens;
    while (i < text.size() && !is_ws(text[i])) ++i;
  }
  return cut;
}

ErrorKind classify(const std::exception& e) {
  if (dynamic_cast<const ReplayMiss*>(&e)) return ErrorKind::replay_miss;
  if (dynamic_cast<const AuthError*>(&e)) return ErrorKind::auth;
  if (dynamic_cast<const ArgumentError*>(&e)) return ErrorKind::argument;
  return ErrorKind::backend;
}

}  // namespace

void validate(const GenerationRequest& req) {
  if (req.prompt.empty()) throw ArgumentError("generation prompt must be non-empty");
  if (req.max_tokens < 1) throw ArgumentError("max_tokens must be >= 1");
  if (!(req.temperature >= 0.0)) throw ArgumentError("temperature must be >= 0");
}

void validate(const BackendConfig& cfg) {
  if (cfg.max_concurrency < 1) throw ArgumentError("max_concurrency must be >= 1");
  if (cfg.max_retries < 0) throw ArgumentError("max_retries must be >= 0");
  if (!(cfg.timeout_s > 0.0)) throw ArgumentError("timeout_s must be > 0");
  if (cfg.max_tokens < 1) throw ArgumentError("max_tokens must be >= 1");
  if (cfg.kind == BackendKind::http && cfg.endpoint_url.empty()) {
    throw ArgumentError("http backend requires endpoint_url");
  }
  if (cfg.kind == BackendKind::stub && cfg.replay_path.empty()) {
    throw ArgumentError("stub backend requires replay_path");
  }
}

std::string to_string(BackendKind kind) {
  return kind == BackendKind::http ? "http" : "stub";
}

BackendKind backend_kind_from_string(const std::string& s) {
  if (s == "http") return BackendKind::http;
  if (s == "stub") return BackendKind::stub;
  throw ArgumentError("unknown backend '" + s + "'");
}

// ---------------------------------------------------------------- stub

StubBackend::StubBackend(std::map<std::string, std::string> completions_by_hash)
    : completions_(std::move(completions_by_hash)) {}

std::shared_ptr<StubBackend> StubBackend::from_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw BackendError("cannot open replay file " + path.string());
  std::map<std::string, std::string> table;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      auto j = json::parse(line);
      table[j.at("prompt_sha256").get<std::string>()] =
          j.at("completion").get<std::string>();
    } catch (const json::exception& e) {
      throw BackendError(path.string() + ":" + std::to_string(lineno) +
                         ": bad replay record: " + e.what());
    }
  }
  return std::make_shared<StubBackend>(std::move(table));
}

GenerationResponse StubBackend::complete(const GenerationRequest& req) {
  const auto start = Clock::now();
  const int now = ++in_flight_;
  int peak = peak_.load();
  while (now > peak && !peak_.compare_exchange_weak(peak, now)) {
  }
  struct Leave {
    std::atomic<int>& c;
    ~Leave() { --c; }
  } leave{in_flight_};

  if (latency_.count() > 0) std::this_thread::sleep_for(latency_);
  {
    std::lock_guard lock(log_mutex_);
    prompts_.push_back(req.prompt);
  }
  validate(req);
  const std::string key = sha256_hex(req.prompt);
  auto it = completions_.find(key);
  if (it == completions_.end()) throw ReplayMiss(key);

  GenerationResponse resp;
  resp.request_id = req.request_id;
  resp.completion = it->second;
  resp.backend = name();
  resp.truncated = truncate(resp.completion, req);
  resp.latency_ms = elapsed_ms(start);
  return resp;
}

std::size_t StubBackend::call_count() const {
  std::lock_guard lock(log_mutex_);
  return prompts_.size();
}

std::vector<std::string> StubBackend::prompts() const {
  std::lock_guard lock(log_mutex_);
  return prompts_;
}

void StubBackend::reset_instrumentation() {
  std::lock_guard lock(log_mutex_);
  prompts_.clear();
  peak_ = 0;
}

// ---------------------------------------------------------------- http

HttpBackend::HttpBackend(BackendConfig cfg, Sleeper sleeper)
    : cfg_(std::move(cfg)), sleeper_(std::move(sleeper)) {
  if (!sleeper_) {
    sleeper_ = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
  }
  const auto scheme_end = cfg_.endpoint_url.find("://");
  if (scheme_end == std::string::npos) {
    throw ArgumentError("endpoint_url must include a scheme: " + cfg_.endpoint_url);
  }
  const auto path_start = cfg_.endpoint_url.find('/', scheme_end + 3);
  base_ = cfg_.endpoint_url.substr(0, path_start);
  path_ = path_start == std::string::npos ? "/" : cfg_.endpoint_url.substr(path_start);
}

int HttpBackend::last_retry_count() { return t_last_retries; }

GenerationResponse HttpBackend::complete(const GenerationRequest& req) {
  validate(req);
  const auto start = Clock::now();
  t_last_retries = 0;

  httplib::Client client(base_);
  const auto timeout = std::chrono::duration<double>(cfg_.timeout_s);
  client.set_connection_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
  client.set_read_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
  client.set_write_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));

  httplib::Headers headers;
  if (!cfg_.auth_env_var.empty()) {
    if (const char* token = std::getenv(cfg_.auth_env_var.c_str())) {
      headers.emplace("Authorization", std::string("Bearer ") + token);
    }
  }
  const json body = {{"prompt", req.prompt},
                     {"max_tokens", req.max_tokens},
                     {"temperature", req.temperature},
                     {"stop", req.stop_sequences}};
  const std::string payload = body.dump();

  std::string last_error;
  for (int attempt = 0;; ++attempt) {
    auto res = client.Post(path_, headers, payload, "application/json");
    if (res) {
      const int status = res->status;
      if (status == 401 || status == 403) {
        throw AuthError("backend rejected credentials (HTTP " + std::to_string(status) + ")");
      }
      if (status >= 200 && status < 300) {
        GenerationResponse resp;
        try {
          auto j = json::parse(res->body);
          resp.completion = j.at("completion").get<std::string>();
          if (j.contains("truncated")) resp.truncated = j["truncated"].get<bool>();
          if (j.contains("finish_reason") && j["finish_reason"].is_string()) {
            const auto reason = j["finish_reason"].get<std::string>();
            resp.truncated = resp.truncated || reason == "length" || reason == "stop_sequence";
          }
        } catch (const json::exception& e) {
          throw BackendError(std::string("malformed backend response: ") + e.what());
        }
        resp.request_id = req.request_id;
        resp.backend = name();
        resp.latency_ms = elapsed_ms(start);
        return resp;
      }
      if (status < 500) {
        throw BackendError("backend returned HTTP " + std::to_string(status));
      }
      last_error = "HTTP " + std::to_string(status);
    } else {
      last_error = httplib::to_string(res.error());
    }
    if (attempt >= cfg_.max_retries) break;
    const double delay_s = cfg_.initial_backoff_s * std::pow(2.0, attempt);
    sleeper_(std::chrono::milliseconds(static_cast<std::int64_t>(delay_s * 1000.0)));
    ++t_last_retries;
  }
  throw BackendError("backend failed after " + std::to_string(cfg_.max_retries) +
                     " retries: " + last_error);
}

// ---------------------------------------------------------------- client

void run_bounded(std::size_t n, int max_concurrency,
                 const std::function<void(std::size_t)>& fn) {
  if (n == 0) return;
  const std::size_t workers =
      std::min<std::size_t>(n, static_cast<std::size_t>(std::max(1, max_concurrency)));
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < n; i = next++) fn(i);
  };
  if (workers == 1) {
    work();
    return;
  }
  std::vector<std::jthread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
}

Client::Client(BackendConfig cfg) : cfg_(std::move(cfg)) {
  validate(cfg_);
  if (cfg_.kind == BackendKind::stub) {
    backend_ = StubBackend::from_file(cfg_.replay_path);
  } else {
    backend_ = std::make_shared<HttpBackend>(cfg_);
  }
}

Client::Client(std::shared_ptr<Backend> backend, BackendConfig cfg)
    : backend_(std::move(backend)), cfg_(std::move(cfg)) {
  if (!backend_) throw ArgumentError("client needs a backend");
  if (cfg_.max_concurrency < 1) throw ArgumentError("max_concurrency must be >= 1");
}

GenerationResponse Client::generate(const GenerationRequest& req) const {
  validate(req);
  return backend_->complete(req);
}

std::vector<BatchResult> Client::generate_batch(
    const std::vector<GenerationRequest>& reqs) const {
  std::vector<BatchResult> out(reqs.size());
  run_bounded(reqs.size(), cfg_.max_concurrency, [&](std::size_t i) {
    out[i].request_id = reqs[i].request_id;
    try {
      out[i].response = generate(reqs[i]);
    } catch (const std::exception& e) {
      out[i].error = ItemError{classify(e), e.what()};
    }
  });
  return out;
}

GenerationResponse generate(const GenerationRequest& req, const BackendConfig& cfg) {
  return Client(cfg).generate(req);
}

std::vector<BatchResult> generate_batch(const std::vector<GenerationRequest>& reqs,
                                        const BackendConfig& cfg) {
  return Client(cfg).generate_batch(reqs);
}

std::string replay_line(const std::string& prompt, const std::string& completion) {
  return json{{"prompt_sha256", sha256_hex(prompt)}, {"completion", completion}}.dump();
}

}  // namespace dockd
