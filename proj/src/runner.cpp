#include "dedcons/runner.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <stdexcept>
#include <thread>

#include <httplib.h>

#include "dedcons/rng.hpp"
#include "dedcons/util.hpp"

namespace dedcons {

using nlohmann::json;

void EndpointConfig::validate() const {
  if (base_url.empty())
    throw std::invalid_argument("endpoint base_url must be non-empty");
  if (max_tokens < 1)
    throw std::invalid_argument("endpoint max_tokens must be >= 1");
  if (max_retries < 0)
    throw std::invalid_argument("endpoint max_retries must be >= 0");
  if (max_concurrency < 1)
    throw std::invalid_argument("endpoint max_concurrency must be >= 1");
  if (request_timeout_ms < 1)
    throw std::invalid_argument("endpoint request_timeout must be positive");
}

json EndpointConfig::to_json() const {
  return json{{"base_url", base_url},
              {"model_name", model_name},
              {"max_tokens", max_tokens},
              {"temperature", temperature},
              {"request_timeout_ms", request_timeout_ms},
              {"max_retries", max_retries},
              {"max_concurrency", max_concurrency},
              {"api_key_env_var", api_key_env_var}};
}

EndpointConfig EndpointConfig::from_json(const json& j) {
  EndpointConfig c;
  if (j.contains("base_url")) c.base_url = j["base_url"].get<std::string>();
  if (j.contains("model_name"))
    c.model_name = j["model_name"].get<std::string>();
  if (j.contains("max_tokens")) c.max_tokens = j["max_tokens"].get<int>();
  if (j.contains("temperature"))
    c.temperature = j["temperature"].get<double>();
  if (j.contains("request_timeout_ms"))
    c.request_timeout_ms = j["request_timeout_ms"].get<int>();
  if (j.contains("max_retries")) c.max_retries = j["max_retries"].get<int>();
  if (j.contains("max_concurrency"))
    c.max_concurrency = j["max_concurrency"].get<int>();
  if (j.contains("api_key_env_var"))
    c.api_key_env_var = j["api_key_env_var"].get<std::string>();
  c.validate();
  return c;
}

std::string status_name(ResponseStatus s) {
  switch (s) {
    case ResponseStatus::Ok: return "ok";
    case ResponseStatus::Timeout: return "timeout";
    case ResponseStatus::RateLimited: return "rate_limited";
    case ResponseStatus::AuthFailure: return "auth_failure";
    case ResponseStatus::Malformed: return "malformed";
    case ResponseStatus::TransportError: return "transport_error";
  }
  return "transport_error";
}

ResponseStatus parse_status(const std::string& name) {
  if (name == "ok") return ResponseStatus::Ok;
  if (name == "timeout") return ResponseStatus::Timeout;
  if (name == "rate_limited") return ResponseStatus::RateLimited;
  if (name == "auth_failure") return ResponseStatus::AuthFailure;
  if (name == "malformed") return ResponseStatus::Malformed;
  if (name == "transport_error") return ResponseStatus::TransportError;
  throw std::invalid_argument("unknown response status: " + name);
}

HttpCompletionClient::HttpCompletionClient(EndpointConfig cfg)
    : cfg_(std::move(cfg)) {
  cfg_.validate();
  if (const char* key = std::getenv(cfg_.api_key_env_var.c_str()))
    api_key_ = key;
}

RawResponse HttpCompletionClient::complete(const PromptBundle& bundle) {
  json messages = json::array();
  messages.push_back({{"role", "system"}, {"content", bundle.system_text}});
  messages.push_back({{"role", "user"}, {"content", bundle.user_text}});
  json body{{"model", cfg_.model_name},
            {"messages", messages},
            {"max_tokens", cfg_.max_tokens},
            {"temperature", cfg_.temperature}};
  if (bundle.assistant_prefill) {
    body["messages"].push_back(
        {{"role", "assistant"}, {"content", *bundle.assistant_prefill}});
    // Continuation shape understood by open-source chat-completions servers:
    // generation resumes from the trailing assistant message.
    body["continue_final_message"] = true;
    body["add_generation_prompt"] = false;
  }
  const std::string payload = body.dump();

  httplib::Client client(cfg_.base_url);
  client.set_connection_timeout(0, cfg_.request_timeout_ms * 1000LL);
  client.set_read_timeout(cfg_.request_timeout_ms / 1000,
                          (cfg_.request_timeout_ms % 1000) * 1000);
  httplib::Headers headers;
  if (!api_key_.empty())
    headers.emplace("Authorization", "Bearer " + api_key_);

  RawResponse out;
  const int max_attempts = cfg_.max_retries + 1;
  const auto t0 = std::chrono::steady_clock::now();
  for (int attempt = 1; attempt <= max_attempts; ++attempt) {
    out.attempt_count = attempt;
    auto res = client.Post("/v1/chat/completions", headers, payload,
                           "application/json");
    if (!res) {
      out.status = ResponseStatus::Timeout;
      out.error = "transport failure: " + httplib::to_string(res.error());
    } else if (res->status == 401 || res->status == 403) {
      out.status = ResponseStatus::AuthFailure;
      out.error = "HTTP " + std::to_string(res->status);
      break;  // fatal; retrying cannot help
    } else if (res->status == 429) {
      out.status = ResponseStatus::RateLimited;
      out.error = "HTTP 429";
    } else if (res->status >= 500) {
      out.status = ResponseStatus::Timeout;
      out.error = "HTTP " + std::to_string(res->status);
    } else if (res->status != 200) {
      out.status = ResponseStatus::TransportError;
      out.error = "HTTP " + std::to_string(res->status) + ": " + res->body;
      break;  // non-retryable client error
    } else {
      try {
        json j = json::parse(res->body);
        out.text = j.at("choices").at(0).at("message").at("content")
                       .get<std::string>();
        out.status = ResponseStatus::Ok;
        out.error.clear();
      } catch (const std::exception& e) {
        out.status = ResponseStatus::Malformed;
        out.error = std::string("unparseable completion body: ") + e.what();
      }
      break;  // 200 is terminal whether or not the body parsed
    }
    if (attempt < max_attempts) {
      const int backoff_ms = std::min(250 * (1 << (attempt - 1)), 4000);
      std::this_thread::sleep_for(std::chrono::milliseconds(backoff_ms));
    }
  }
  out.latency_ms = std::chrono::duration<double, std::milli>(
                       std::chrono::steady_clock::now() - t0)
                       .count();
  return out;
}

void MockReasonerConfig::validate() const {
  if (!(per_step_error_rate >= 0.0 && per_step_error_rate <= 1.0))
    throw std::invalid_argument("per_step_error_rate must lie in [0,1]");
}

MockReasonerConfig::ErrorMode MockReasonerConfig::parse_error_mode(
    const std::string& name) {
  if (name == "perturb-value") return ErrorMode::PerturbValue;
  if (name == "propagate") return ErrorMode::Propagate;
  if (name == "independent") return ErrorMode::Independent;
  throw std::invalid_argument("unknown mock error mode: " + name);
}

std::string MockReasonerConfig::error_mode_name(ErrorMode m) {
  switch (m) {
    case ErrorMode::PerturbValue: return "perturb-value";
    case ErrorMode::Propagate: return "propagate";
    case ErrorMode::Independent: return "independent";
  }
  return "independent";
}

namespace {

double parse_numeric_text(const std::string& text) {
  return std::strtod(text.c_str(), nullptr);
}

/// Renders a corrupted value the way reference values are rendered, so the
/// mock output stays pattern-extractable.
std::string render_numeric(double v) {
  if (std::abs(v) < 9.0e15 && v == std::floor(v))
    return std::to_string(static_cast<long long>(v));
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

}  // namespace

RawResponse mock_reason(const EvalInstance& instance,
                        const MockReasonerConfig& cfg) {
  cfg.validate();
  Rng rng(derive_seed(cfg.seed,
                      {fnv1a("mock"), fnv1a(instance.instance_id)}));

  // Any corruption must clear the 5% correctness tolerance for every step,
  // so size the offset unit against the largest value in the continuation.
  double max_abs = 1.0;
  for (const auto& step : instance.continuation_steps)
    max_abs = std::max(max_abs, std::abs(parse_numeric_text(step.value)));
  const long long unit =
      static_cast<long long>(std::ceil(max_abs * 0.06)) + 1;

  const double p = cfg.per_step_error_rate;
  long long running_offset = 0;  // independent / propagate corruption state
  bool poisoned = false;
  std::string text;
  std::string final_text = instance.final_answer;
  for (const auto& step : instance.continuation_steps) {
    long long offset = 0;
    switch (cfg.error_mode) {
      case MockReasonerConfig::ErrorMode::Independent:
        if (rng.bernoulli(p))
          running_offset += unit * rng.uniform_int(1, 9);
        offset = running_offset;
        break;
      case MockReasonerConfig::ErrorMode::Propagate:
        if (!poisoned && rng.bernoulli(p)) {
          poisoned = true;
          running_offset = unit * rng.uniform_int(1, 9);
        }
        offset = poisoned ? running_offset : 0;
        break;
      case MockReasonerConfig::ErrorMode::PerturbValue:
        if (rng.bernoulli(p)) offset = unit * rng.uniform_int(1, 9);
        break;
    }
    if (offset == 0) {
      text += step.text;
      if (step.name == instance.target) final_text = step.value;
    } else {
      const std::string wrong =
          render_numeric(parse_numeric_text(step.value) +
                         static_cast<double>(offset));
      text += step.prelude + wrong + step.tail;
      if (step.name == instance.target) final_text = wrong;
    }
  }
  text += "\n#### " + final_text;

  RawResponse out;
  out.text = std::move(text);
  out.status = ResponseStatus::Ok;
  out.latency_ms = 0.0;
  out.attempt_count = 1;
  return out;
}

MockCompletionClient::MockCompletionClient(
    const std::vector<EvalInstance>& instances, MockReasonerConfig cfg)
    : cfg_(cfg) {
  cfg_.validate();
  for (const auto& inst : instances) by_id_[inst.instance_id] = &inst;
}

RawResponse MockCompletionClient::complete(const PromptBundle& bundle) {
  auto it = by_id_.find(bundle.instance_ref);
  if (it == by_id_.end()) {
    RawResponse out;
    out.status = ResponseStatus::TransportError;
    out.error = "mock backend has no instance: " + bundle.instance_ref;
    return out;
  }
  return mock_reason(*it->second, cfg_);
}

json StoredResponse::to_json() const {
  json j{{"run_id", run_id},
         {"instance_id", instance_id},
         {"prompt", prompt.to_json()},
         {"text", text},
         {"status", status_name(status)},
         {"latency_ms", latency_ms},
         {"attempt_count", attempt_count}};
  if (!error.empty()) j["error"] = error;
  return j;
}

StoredResponse StoredResponse::from_json(const json& j) {
  StoredResponse r;
  r.run_id = j.at("run_id").get<std::string>();
  r.instance_id = j.at("instance_id").get<std::string>();
  r.prompt = PromptBundle::from_json(j.at("prompt"));
  r.text = j.at("text").get<std::string>();
  r.status = parse_status(j.at("status").get<std::string>());
  r.latency_ms = j.value("latency_ms", 0.0);
  r.attempt_count = j.value("attempt_count", 1);
  r.error = j.value("error", std::string());
  return r;
}

ResponseStore::ResponseStore(std::string path) : path_(std::move(path)) {
  if (!file_exists(path_)) return;
  for (const auto& j : read_jsonl(path_)) {
    StoredResponse r = StoredResponse::from_json(j);
    keys_.emplace(r.run_id, r.instance_id);
    records_.push_back(std::move(r));
  }
}

bool ResponseStore::has(const std::string& run_id,
                        const std::string& instance_id) const {
  return keys_.count({run_id, instance_id}) > 0;
}

void ResponseStore::append(StoredResponse record) {
  std::ofstream out(path_, std::ios::app);
  if (!out)
    throw std::runtime_error("cannot open response store: " + path_);
  out << record.to_json().dump() << "\n";
  out.flush();
  if (!out)
    throw std::runtime_error("write failed on response store: " + path_);
  keys_.emplace(record.run_id, record.instance_id);
  records_.push_back(std::move(record));
}

std::map<std::string, const StoredResponse*> latest_responses(
    const ResponseStore& store, const std::string& run_id) {
  std::map<std::string, const StoredResponse*> latest;
  for (const auto& r : store.records())
    if (r.run_id == run_id) latest[r.instance_id] = &r;
  return latest;
}

RunStats run_instances(const std::vector<EvalInstance>& instances,
                       const PromptTemplates& templates,
                       CompletionClient& client, ResponseStore& store,
                       const RunOptions& opts) {
  if (opts.run_id.empty())
    throw std::invalid_argument("run_id must be non-empty");
  if (opts.max_concurrency < 1)
    throw std::invalid_argument("max_concurrency must be >= 1");

  RunStats stats;
  stats.total = static_cast<int>(instances.size());

  std::vector<const EvalInstance*> todo;
  for (const auto& inst : instances) {
    if (!opts.overwrite && store.has(opts.run_id, inst.instance_id)) {
      ++stats.skipped;
      continue;
    }
    todo.push_back(&inst);
  }

  const std::size_t batch = static_cast<std::size_t>(opts.max_concurrency);
  for (std::size_t start = 0; start < todo.size(); start += batch) {
    const std::size_t n = std::min(batch, todo.size() - start);
    std::vector<PromptBundle> bundles(n);
    std::vector<RawResponse> results(n);
    std::vector<std::thread> workers;
    workers.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      bundles[i] = build_prompt(*todo[start + i], templates);
      workers.emplace_back([&client, &bundles, &results, i] {
        results[i] = client.complete(bundles[i]);
      });
    }
    for (auto& w : workers) w.join();
    // Appends happen on this thread only, in dataset order.
    for (std::size_t i = 0; i < n; ++i) {
      StoredResponse rec;
      rec.run_id = opts.run_id;
      rec.instance_id = todo[start + i]->instance_id;
      rec.prompt = std::move(bundles[i]);
      rec.text = std::move(results[i].text);
      rec.status = results[i].status;
      rec.latency_ms = results[i].latency_ms;
      rec.attempt_count = results[i].attempt_count;
      rec.error = std::move(results[i].error);
      if (rec.status == ResponseStatus::Ok)
        ++stats.completed;
      else
        ++stats.failed;
      store.append(std::move(rec));
    }
  }
  return stats;
}

}  // namespace dedcons
