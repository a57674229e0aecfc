#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "dedcons/instance.hpp"
#include "dedcons/prompts.hpp"

namespace dedcons {

struct EndpointConfig {
  std::string base_url = "http://127.0.0.1:8080";
  std::string model_name;
  int max_tokens = 2048;
  double temperature = 0.0;
  int request_timeout_ms = 60000;
  int max_retries = 3;
  int max_concurrency = 4;
  std::string api_key_env_var = "DEDCONS_API_KEY";

  void validate() const;  ///< throws std::invalid_argument
  nlohmann::json to_json() const;
  static EndpointConfig from_json(const nlohmann::json& j);
};

enum class ResponseStatus {
  Ok,
  Timeout,        // transient; retried, recorded if retries exhausted
  RateLimited,    // transient; retried, recorded if retries exhausted
  AuthFailure,    // fatal for the instance, run continues
  Malformed,      // fatal for the instance, run continues
  TransportError  // non-retryable HTTP failure
};

std::string status_name(ResponseStatus s);
ResponseStatus parse_status(const std::string& name);

struct RawResponse {
  std::string text;
  ResponseStatus status = ResponseStatus::Ok;
  double latency_ms = 0.0;
  int attempt_count = 1;
  std::string error;  ///< detail for non-ok statuses
};

class CompletionClient {
 public:
  virtual ~CompletionClient() = default;
  virtual RawResponse complete(const PromptBundle& bundle) = 0;
};

/// Chat-completions HTTP client (POST {base_url}/v1/chat/completions).
/// Prefill rides as a trailing assistant message so generation continues
/// from it without an end-of-turn terminator.
class HttpCompletionClient : public CompletionClient {
 public:
  explicit HttpCompletionClient(EndpointConfig cfg);
  RawResponse complete(const PromptBundle& bundle) override;

 private:
  EndpointConfig cfg_;
  std::string api_key_;
};

struct MockReasonerConfig {
  enum class ErrorMode { PerturbValue, Propagate, Independent };

  double per_step_error_rate = 0.0;
  ErrorMode error_mode = ErrorMode::Independent;
  std::uint64_t seed = 0;

  void validate() const;  ///< throws std::invalid_argument if p outside [0,1]
  static ErrorMode parse_error_mode(const std::string& name);
  static std::string error_mode_name(ErrorMode m);
};

/// Emits the post-prefix reference steps in the exact dataset step format
/// plus a "#### {final}" line; with probability p per step the reported
/// value is corrupted per error_mode. p = 0 reproduces the reference
/// continuation byte-for-byte. Deterministic in (cfg.seed, instance_id).
RawResponse mock_reason(const EvalInstance& instance,
                        const MockReasonerConfig& cfg);

/// CompletionClient facade over mock_reason, so the run loop treats mock
/// and HTTP backends uniformly. Looks instances up by instance_ref.
class MockCompletionClient : public CompletionClient {
 public:
  MockCompletionClient(const std::vector<EvalInstance>& instances,
                       MockReasonerConfig cfg);
  RawResponse complete(const PromptBundle& bundle) override;

 private:
  std::map<std::string, const EvalInstance*> by_id_;
  MockReasonerConfig cfg_;
};

struct StoredResponse {
  std::string run_id;
  std::string instance_id;
  PromptBundle prompt;
  std::string text;
  ResponseStatus status = ResponseStatus::Ok;
  double latency_ms = 0.0;
  int attempt_count = 1;
  std::string error;

  nlohmann::json to_json() const;
  static StoredResponse from_json(const nlohmann::json& j);
};

/// Append-only JSONL store keyed by (run_id, instance_id). Existing records
/// are loaded on construction; appends flush line-by-line.
class ResponseStore {
 public:
  explicit ResponseStore(std::string path);

  bool has(const std::string& run_id, const std::string& instance_id) const;
  void append(StoredResponse record);
  const std::vector<StoredResponse>& records() const { return records_; }
  const std::string& path() const { return path_; }

 private:
  std::string path_;
  std::vector<StoredResponse> records_;
  std::set<std::pair<std::string, std::string>> keys_;
};

/// Latest stored record per instance for one run (later appends win, which
/// is what --overwrite relies on).
std::map<std::string, const StoredResponse*> latest_responses(
    const ResponseStore& store, const std::string& run_id);

struct RunOptions {
  std::string run_id;
  int max_concurrency = 4;
  bool overwrite = false;
};

struct RunStats {
  int total = 0;
  int completed = 0;  // status ok
  int failed = 0;     // recorded with a non-ok status
  int skipped = 0;    // already answered and not --overwrite
};

/// Dispatches all instances with at most max_concurrency requests in
/// flight; results are appended to the store in dataset order.
RunStats run_instances(const std::vector<EvalInstance>& instances,
                       const PromptTemplates& templates,
                       CompletionClient& client, ResponseStore& store,
                       const RunOptions& opts);

}  // namespace dedcons
