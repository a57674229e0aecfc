#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "dedcons/extract.hpp"
#include "dedcons/prompts.hpp"
#include "dedcons/runner.hpp"

using namespace dedcons;
using nlohmann::json;

namespace {

/// Builds a synthetic-graph style instance with the given post-prefix steps.
EvalInstance make_instance(const std::string& id,
                           const std::vector<std::pair<std::string, long long>>& steps,
                           int prefix_k) {
  EvalInstance e;
  e.instance_id = id;
  e.source = "syndeduct";
  e.problem_id = "t";
  e.graph_ref = "g0";
  e.style = Style::Original;
  e.question_text = "=== Graph Structure ===\n...\n\n  What is the value of " +
                    steps.back().first + "?";
  e.target = steps.back().first;
  e.prefix_k = prefix_k;
  e.hop_total = static_cast<int>(steps.size());
  if (prefix_k >= 1) e.prefix_text = "- Given value of Z = 1 .";
  int hop = 1;
  for (const auto& [name, value] : steps) {
    CotStep step;
    step.name = name;
    step.prelude = name + " is derived.\nThe Computed value of " + name +
                   " = ";
    step.value = std::to_string(value);
    step.tail = " ";
    step.text = step.prelude + step.value + step.tail;
    e.continuation_steps.push_back(step);
    e.per_variable_hops[name] = hop++;
    e.ground_truth[name] = std::to_string(value);
  }
  e.final_answer = std::to_string(steps.back().second);
  return e;
}

EvalInstance default_instance(int prefix_k = 1) {
  return make_instance("t:g0:D:k" + std::to_string(prefix_k),
                       {{"A", 4}, {"B", 6}, {"C", 10}, {"D", 100}}, prefix_k);
}

std::string temp_store_path(const char* tag) {
  return std::string("/tmp/dedcons_test_store_") + tag + "_" +
         std::to_string(::getpid()) + ".jsonl";
}

}  // namespace

TEST_CASE("prompt assembly per instance source") {
  PromptTemplates templates;

  EvalInstance synth = default_instance(1);
  const PromptBundle p = build_prompt(synth, templates);
  CHECK(p.instance_ref == synth.instance_id);
  CHECK(p.user_text == synth.question_text);
  REQUIRE(p.assistant_prefill.has_value());
  CHECK(*p.assistant_prefill == "Answer: - Given value of Z = 1 .");
  CHECK(p.system_text == syndeduct_system_prompt(templates.rules,
                                                 Style::Original));

  EvalInstance fresh = default_instance(0);
  fresh.prefix_text.clear();
  const PromptBundle q = build_prompt(fresh, templates);
  CHECK_FALSE(q.assistant_prefill.has_value());

  EvalInstance bench = default_instance(1);
  bench.source = "benchmark";
  bench.question_text = "Mary buys 3 books for $15 each. How much?";
  const PromptBundle r = build_prompt(bench, templates);
  CHECK(r.system_text ==
        "You are an expert in math. You must answer this question. You give "
        "the step-by-step solution followed by four # symbols followed by "
        "the answer.");
  CHECK(r.user_text == "Question: " + bench.question_text);
  REQUIRE(r.assistant_prefill.has_value());
  CHECK(*r.assistant_prefill == "Answer: - Given value of Z = 1 .");

  // Round trip through JSON keeps everything, including the prefill.
  const PromptBundle back = PromptBundle::from_json(p.to_json());
  CHECK(back.system_text == p.system_text);
  CHECK(back.user_text == p.user_text);
  CHECK(back.assistant_prefill == p.assistant_prefill);
  CHECK(back.instance_ref == p.instance_ref);
}

TEST_CASE("graph system prompt carries the rule set and example") {
  const std::string sp =
      syndeduct_system_prompt(RuleSet::builtin(), Style::Original);
  // No unfilled slot survives.
  CHECK(sp.find("is filled here") == std::string::npos);
  // The rule set rides as pretty-printed JSON with the legacy layout.
  CHECK(sp.find("\"add\": {") != std::string::npos);
  CHECK(sp.find("\"function\": \"lambda x, y: x + y\"") != std::string::npos);
  CHECK(sp.find("\"verbalization\": \"{child} is the sum of {parent1} and "
                "{parent2}.\"") != std::string::npos);
  // The fixed worked example survives verbatim, final line unterminated.
  CHECK(sp.find("Rondeau is an input with value 10.") != std::string::npos);
  CHECK(sp.find("- Septembr is the square of Rondeau.") != std::string::npos);
  const std::string tail = "####100";
  REQUIRE(sp.size() > tail.size());
  CHECK(sp.substr(sp.size() - tail.size()) == tail);

  // Paraphrase styles swap the verbalization templates.
  const std::string ax =
      syndeduct_system_prompt(RuleSet::builtin(), Style::ParaAx);
  CHECK(ax.find("Axiom-{axiom} (Addition)") != std::string::npos);
  CHECK(ax != sp);
}

TEST_CASE("extractor and judge prompts are well-formed") {
  const std::string sys = extractor_system_prompt();
  CHECK(sys.find("<JSON>") != std::string::npos);
  CHECK(sys.find("None") != std::string::npos);
  // Both worked examples ride along verbatim.
  CHECK(sys.find("Hillary") != std::string::npos);
  CHECK(sys.find("hard hats") != std::string::npos);
  CHECK(sys.find("\\(15 \\times 6 = 90\\)") != std::string::npos);

  json dict = {{"total_pages", "the total number of pages"}};
  const std::string user = extractor_user_prompt(
      "Q text", "S text", dict, "T hint");
  CHECK(user.find("Question: Q text") != std::string::npos);
  CHECK(user.find("Step-by-step solution: S text") != std::string::npos);
  CHECK(user.find(dict.dump(4)) != std::string::npos);
  CHECK(user.find("T hint") != std::string::npos);

  CHECK(judge_system_prompt().find("<JSON>") != std::string::npos);
  const std::string judge = judge_user_prompt("q", "ref", "resp");
  CHECK(judge.find("q") != std::string::npos);
  CHECK(judge.find("ref") != std::string::npos);
  CHECK(judge.find("resp") != std::string::npos);
}

TEST_CASE("status names round trip") {
  for (ResponseStatus s :
       {ResponseStatus::Ok, ResponseStatus::Timeout,
        ResponseStatus::RateLimited, ResponseStatus::AuthFailure,
        ResponseStatus::Malformed, ResponseStatus::TransportError}) {
    CHECK(parse_status(status_name(s)) == s);
  }
  CHECK(status_name(ResponseStatus::Ok) == "ok");
  CHECK(status_name(ResponseStatus::RateLimited) == "rate_limited");
}

TEST_CASE("oracle mock reproduces the reference continuation at p = 0") {
  const EvalInstance inst = default_instance(1);
  MockReasonerConfig cfg;
  cfg.per_step_error_rate = 0.0;
  cfg.seed = 5;

  const RawResponse r = mock_reason(inst, cfg);
  CHECK(r.status == ResponseStatus::Ok);
  CHECK(r.attempt_count == 1);
  CHECK(r.latency_ms == 0.0);

  std::string expected;
  for (const CotStep& s : inst.continuation_steps) expected += s.text;
  expected += "\n#### 100";
  CHECK(r.text == expected);
  CHECK(extract_final_answer(r.text) == 100.0);
}

TEST_CASE("mock error modes corrupt beyond the tolerance") {
  const EvalInstance inst = default_instance(1);
  const std::vector<std::string> vars = {"A", "B", "C", "D"};
  const std::map<std::string, double> truth = {
      {"A", 4}, {"B", 6}, {"C", 10}, {"D", 100}};

  for (MockReasonerConfig::ErrorMode mode :
       {MockReasonerConfig::ErrorMode::PerturbValue,
        MockReasonerConfig::ErrorMode::Propagate,
        MockReasonerConfig::ErrorMode::Independent}) {
    MockReasonerConfig cfg;
    cfg.per_step_error_rate = 1.0;
    cfg.error_mode = mode;
    cfg.seed = 11;

    const RawResponse r = mock_reason(inst, cfg);
    const ExtractedAssignment got = extract_variables_pattern(r.text, vars);
    std::vector<double> deltas;
    for (const auto& v : vars) {
      REQUIRE(got.get(v).has_value());
      const double reported = *got.get(v);
      const double expected = truth.at(v);
      CHECK(reported != expected);
      CHECK_FALSE(values_match(reported, expected));  // beyond 5%
      deltas.push_back(reported - expected);
    }
    if (mode == MockReasonerConfig::ErrorMode::Propagate) {
      // One fault, carried verbatim through every later step.
      for (std::size_t i = 1; i < deltas.size(); ++i)
        CHECK(deltas[i] == deltas[0]);
    }
    if (mode == MockReasonerConfig::ErrorMode::Independent) {
      // Fresh faults accumulate, so offsets grow monotonically.
      for (std::size_t i = 1; i < deltas.size(); ++i)
        CHECK(deltas[i] > deltas[i - 1]);
    }
    // The corrupted target propagates into the final answer.
    CHECK(extract_final_answer(r.text) == *got.get("D"));
  }
}

TEST_CASE("mock is deterministic in seed and instance id") {
  std::vector<std::pair<std::string, long long>> steps;
  for (int i = 0; i < 12; ++i)
    steps.emplace_back("N" + std::to_string(i), 10 + i);
  const EvalInstance a = make_instance("ia", steps, 1);

  MockReasonerConfig cfg;
  cfg.per_step_error_rate = 0.5;
  cfg.seed = 21;
  CHECK(mock_reason(a, cfg).text == mock_reason(a, cfg).text);

  MockReasonerConfig other = cfg;
  other.seed = 22;
  CHECK(mock_reason(a, other).text != mock_reason(a, cfg).text);

  const EvalInstance b = make_instance("ib", steps, 1);
  CHECK(mock_reason(b, cfg).text != mock_reason(a, cfg).text);
}

TEST_CASE("mock config parsing and validation") {
  using EM = MockReasonerConfig::ErrorMode;
  CHECK(MockReasonerConfig::parse_error_mode("perturb-value") ==
        EM::PerturbValue);
  CHECK(MockReasonerConfig::parse_error_mode("propagate") == EM::Propagate);
  CHECK(MockReasonerConfig::parse_error_mode("independent") ==
        EM::Independent);
  CHECK_THROWS_AS(MockReasonerConfig::parse_error_mode("nope"),
                  std::invalid_argument);
  for (EM m : {EM::PerturbValue, EM::Propagate, EM::Independent}) {
    CHECK(MockReasonerConfig::parse_error_mode(
              MockReasonerConfig::error_mode_name(m)) == m);
  }
  MockReasonerConfig bad;
  bad.per_step_error_rate = 1.5;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("response store append, reload, and latest-wins") {
  const std::string path = temp_store_path("store");
  std::remove(path.c_str());
  {
    ResponseStore store(path);
    CHECK(store.records().empty());
    StoredResponse rec;
    rec.run_id = "r1";
    rec.instance_id = "i1";
    rec.text = "first";
    store.append(rec);
    rec.text = "second";
    store.append(rec);  // same key appended again (overwrite path)
    rec.instance_id = "i2";
    rec.text = "other";
    store.append(rec);
    CHECK(store.has("r1", "i1"));
    CHECK(store.has("r1", "i2"));
    CHECK_FALSE(store.has("r2", "i1"));

    const auto latest = latest_responses(store, "r1");
    REQUIRE(latest.size() == 2);
    CHECK(latest.at("i1")->text == "second");
    CHECK(latest.at("i2")->text == "other");
    CHECK(latest_responses(store, "r2").empty());
  }
  // Reload from disk preserves everything, in order.
  ResponseStore reloaded(path);
  REQUIRE(reloaded.records().size() == 3);
  CHECK(reloaded.records()[0].text == "first");
  CHECK(reloaded.records()[1].text == "second");
  CHECK(latest_responses(reloaded, "r1").at("i1")->text == "second");
  std::remove(path.c_str());
}

TEST_CASE("run loop skips answered instances unless overwritten") {
  std::vector<EvalInstance> instances;
  for (int i = 0; i < 5; ++i) {
    auto inst = default_instance(1);
    inst.instance_id = "inst" + std::to_string(i);
    instances.push_back(inst);
  }
  MockReasonerConfig cfg;
  cfg.per_step_error_rate = 0.0;
  MockCompletionClient client(instances, cfg);
  PromptTemplates templates;

  const std::string path = temp_store_path("run");
  std::remove(path.c_str());
  {
    ResponseStore store(path);
    RunOptions opts;
    opts.run_id = "r";
    opts.max_concurrency = 3;
    const RunStats stats =
        run_instances(instances, templates, client, store, opts);
    CHECK(stats.total == 5);
    CHECK(stats.completed == 5);
    CHECK(stats.failed == 0);
    CHECK(stats.skipped == 0);
    // Results land in dataset order regardless of thread scheduling.
    REQUIRE(store.records().size() == 5);
    for (int i = 0; i < 5; ++i) {
      CHECK(store.records()[static_cast<size_t>(i)].instance_id ==
            "inst" + std::to_string(i));
      CHECK(store.records()[static_cast<size_t>(i)].status ==
            ResponseStatus::Ok);
    }

    const RunStats rerun =
        run_instances(instances, templates, client, store, opts);
    CHECK(rerun.skipped == 5);
    CHECK(rerun.completed == 0);
    CHECK(store.records().size() == 5);

    RunOptions force = opts;
    force.overwrite = true;
    const RunStats redo =
        run_instances(instances, templates, client, store, force);
    CHECK(redo.completed == 5);
    CHECK(store.records().size() == 10);
  }
  std::remove(path.c_str());

  CHECK_THROWS_AS(
      [&] {
        ResponseStore s(temp_store_path("bad"));
        RunOptions opts;  // empty run_id
        run_instances(instances, templates, client, s, opts);
      }(),
      std::invalid_argument);
}

TEST_CASE("endpoint config validation and round trip") {
  EndpointConfig cfg;
  cfg.model_name = "m";
  cfg.validate();
  const EndpointConfig back = EndpointConfig::from_json(cfg.to_json());
  CHECK(back.base_url == cfg.base_url);
  CHECK(back.model_name == cfg.model_name);
  CHECK(back.max_tokens == cfg.max_tokens);
  CHECK(back.api_key_env_var == cfg.api_key_env_var);

  EndpointConfig bad = cfg;
  bad.base_url.clear();
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  EndpointConfig neg = cfg;
  neg.max_retries = -1;
  CHECK_THROWS_AS(neg.validate(), std::invalid_argument);
}

TEST_CASE("http client against a local chat-completions stub") {
  httplib::Server server;
  std::mutex mtx;
  json last_body;
  std::string last_auth;
  std::atomic<int> rate_limited_calls{0};

  auto ok_body = [](const std::string& content) {
    return json{{"choices", {{{"message", {{"content", content}}}}}}}.dump();
  };

  server.Post("/v1/chat/completions",
              [&](const httplib::Request& req, httplib::Response& res) {
                json body = json::parse(req.body, nullptr, false);
                {
                  std::lock_guard<std::mutex> lock(mtx);
                  last_body = body;
                  last_auth = req.get_header_value("Authorization");
                }
                const std::string model = body.value("model", "");
                if (model == "m-ok") {
                  res.set_content(ok_body("hello"), "application/json");
                } else if (model == "m-429") {
                  if (++rate_limited_calls <= 2) {
                    res.status = 429;
                  } else {
                    res.set_content(ok_body("after-retry"),
                                    "application/json");
                  }
                } else if (model == "m-401") {
                  res.status = 401;
                } else if (model == "m-500") {
                  res.status = 500;
                } else if (model == "m-404") {
                  res.status = 404;
                  res.set_content("not found", "text/plain");
                } else if (model == "m-bad") {
                  res.set_content("absolutely not json", "application/json");
                }
              });

  const int port = server.bind_to_any_port("127.0.0.1");
  REQUIRE(port > 0);
  std::thread server_thread([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  const std::string base_url = "http://127.0.0.1:" + std::to_string(port);
  ::setenv("DEDCONS_TEST_KEY", "test-key-123", 1);

  auto make_cfg = [&](const std::string& model) {
    EndpointConfig cfg;
    cfg.base_url = base_url;
    cfg.model_name = model;
    cfg.request_timeout_ms = 5000;
    cfg.max_retries = 2;
    cfg.api_key_env_var = "DEDCONS_TEST_KEY";
    return cfg;
  };

  PromptTemplates templates;
  const PromptBundle with_prefill =
      build_prompt(default_instance(1), templates);
  EvalInstance fresh = default_instance(0);
  fresh.prefix_text.clear();
  const PromptBundle no_prefill = build_prompt(fresh, templates);

  {
    HttpCompletionClient client(make_cfg("m-ok"));
    const RawResponse r = client.complete(with_prefill);
    CHECK(r.status == ResponseStatus::Ok);
    CHECK(r.text == "hello");
    CHECK(r.attempt_count == 1);
    CHECK(r.error.empty());

    std::lock_guard<std::mutex> lock(mtx);
    CHECK(last_auth == "Bearer test-key-123");
    REQUIRE(last_body.at("messages").size() == 3);
    CHECK(last_body["messages"][0]["role"] == "system");
    CHECK(last_body["messages"][0]["content"] == with_prefill.system_text);
    CHECK(last_body["messages"][1]["role"] == "user");
    CHECK(last_body["messages"][2]["role"] == "assistant");
    CHECK(last_body["messages"][2]["content"] ==
          *with_prefill.assistant_prefill);
    CHECK(last_body.at("continue_final_message") == true);
    CHECK(last_body.at("add_generation_prompt") == false);
    CHECK(last_body.at("model") == "m-ok");
  }
  {
    HttpCompletionClient client(make_cfg("m-ok"));
    const RawResponse r = client.complete(no_prefill);
    CHECK(r.status == ResponseStatus::Ok);
    std::lock_guard<std::mutex> lock(mtx);
    REQUIRE(last_body.at("messages").size() == 2);
    CHECK_FALSE(last_body.contains("continue_final_message"));
    CHECK_FALSE(last_body.contains("add_generation_prompt"));
  }
  {
    // Two 429s, then success: three attempts with backoff.
    HttpCompletionClient client(make_cfg("m-429"));
    const RawResponse r = client.complete(no_prefill);
    CHECK(r.status == ResponseStatus::Ok);
    CHECK(r.text == "after-retry");
    CHECK(r.attempt_count == 3);
  }
  {
    HttpCompletionClient client(make_cfg("m-401"));
    const RawResponse r = client.complete(no_prefill);
    CHECK(r.status == ResponseStatus::AuthFailure);
    CHECK(r.attempt_count == 1);  // fatal, never retried
  }
  {
    EndpointConfig cfg = make_cfg("m-500");
    cfg.max_retries = 1;
    HttpCompletionClient client(cfg);
    const RawResponse r = client.complete(no_prefill);
    CHECK(r.status == ResponseStatus::Timeout);  // retryable bucket
    CHECK(r.attempt_count == 2);                 // retries exhausted
    CHECK(r.error == "HTTP 500");
  }
  {
    HttpCompletionClient client(make_cfg("m-404"));
    const RawResponse r = client.complete(no_prefill);
    CHECK(r.status == ResponseStatus::TransportError);
    CHECK(r.attempt_count == 1);
  }
  {
    HttpCompletionClient client(make_cfg("m-bad"));
    const RawResponse r = client.complete(no_prefill);
    CHECK(r.status == ResponseStatus::Malformed);
    CHECK(r.attempt_count == 1);
  }
  {
    // Without the env var no Authorization header is sent.
    ::unsetenv("DEDCONS_TEST_KEY");
    HttpCompletionClient client(make_cfg("m-ok"));
    client.complete(no_prefill);
    std::lock_guard<std::mutex> lock(mtx);
    CHECK(last_auth.empty());
    ::setenv("DEDCONS_TEST_KEY", "test-key-123", 1);
  }

  server.stop();
  server_thread.join();
}
