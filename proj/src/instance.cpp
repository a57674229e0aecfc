#include "dedcons/instance.hpp"

#include <fstream>
#include <stdexcept>

#include "dedcons/util.hpp"

namespace dedcons {

void EvalInstance::validate() const {
  auto fail = [&](const std::string& why) {
    throw std::runtime_error("instance " + instance_id + ": " + why);
  };
  if (source != "syndeduct" && source != "benchmark") fail("unknown source");
  if (prefix_k < 0) fail("negative prefix_k");
  if (hop_total < 1) fail("hop_total must be >= 1");
  if (prefix_k == 0 && !prefix_text.empty()) fail("prefix text without steps");
  if (prefix_k > 0 && prefix_text.empty()) fail("steps without prefix text");
  if (static_cast<int>(continuation_steps.size()) != hop_total)
    fail("continuation step count != hop_total");
  if (static_cast<int>(per_variable_hops.size()) != hop_total)
    fail("per_variable_hops size != hop_total");
  for (int j = 0; j < hop_total; ++j) {
    const CotStep& step = continuation_steps[static_cast<size_t>(j)];
    if (step.name.empty()) fail("unnamed continuation step");
    auto it = per_variable_hops.find(step.name);
    if (it == per_variable_hops.end())
      fail("step " + step.name + " missing from per_variable_hops");
    if (it->second != j + 1)
      fail("step " + step.name + " has wrong hop index");
    if (!ground_truth.count(step.name))
      fail("step " + step.name + " missing from ground truth");
  }
  auto tgt = per_variable_hops.find(target);
  if (tgt == per_variable_hops.end()) fail("target not a scored variable");
  if (tgt->second != hop_total) fail("target hop != hop_total");
  auto fin = ground_truth.find(target);
  if (fin == ground_truth.end() || fin->second != final_answer)
    fail("final answer disagrees with ground truth");
}

nlohmann::json EvalInstance::to_json() const {
  nlohmann::json j;
  j["instance_id"] = instance_id;
  j["source"] = source;
  j["problem_id"] = problem_id;
  if (mutation_index >= 0) j["mutation_index"] = mutation_index;
  if (!graph_ref.empty()) j["graph_ref"] = graph_ref;
  j["style"] = style_name(style);
  j["question_text"] = question_text;
  j["target"] = target;
  j["prefix_k"] = prefix_k;
  j["hop_total"] = hop_total;
  j["per_variable_hops"] = per_variable_hops;
  j["ground_truth"] = ground_truth;
  j["final_answer"] = final_answer;
  j["prefix_text"] = prefix_text;
  nlohmann::json steps = nlohmann::json::array();
  for (const CotStep& s : continuation_steps) {
    steps.push_back({{"name", s.name},
                     {"prelude", s.prelude},
                     {"value", s.value},
                     {"tail", s.tail},
                     {"text", s.text}});
  }
  j["continuation_steps"] = std::move(steps);
  return j;
}

EvalInstance EvalInstance::from_json(const nlohmann::json& j) {
  EvalInstance out;
  out.instance_id = j.at("instance_id").get<std::string>();
  out.source = j.at("source").get<std::string>();
  out.problem_id = j.at("problem_id").get<std::string>();
  out.mutation_index = j.value("mutation_index", -1);
  out.graph_ref = j.value("graph_ref", std::string());
  out.style = require_style(j.at("style").get<std::string>());
  out.question_text = j.at("question_text").get<std::string>();
  out.target = j.at("target").get<std::string>();
  out.prefix_k = j.at("prefix_k").get<int>();
  out.hop_total = j.at("hop_total").get<int>();
  out.per_variable_hops =
      j.at("per_variable_hops").get<std::map<std::string, int>>();
  out.ground_truth =
      j.at("ground_truth").get<std::map<std::string, std::string>>();
  out.final_answer = j.at("final_answer").get<std::string>();
  out.prefix_text = j.at("prefix_text").get<std::string>();
  for (const nlohmann::json& s : j.at("continuation_steps")) {
    CotStep step;
    step.name = s.at("name").get<std::string>();
    step.prelude = s.at("prelude").get<std::string>();
    step.value = s.at("value").get<std::string>();
    step.tail = s.value("tail", std::string());
    step.text = s.value("text", step.prelude + step.value + step.tail);
    out.continuation_steps.push_back(std::move(step));
  }
  return out;
}

void write_instances(const std::string& path,
                     const std::vector<EvalInstance>& instances) {
  std::vector<nlohmann::json> lines;
  lines.reserve(instances.size());
  for (const EvalInstance& inst : instances) lines.push_back(inst.to_json());
  write_jsonl(path, lines);
}

std::vector<EvalInstance> read_instances(const std::string& path) {
  std::vector<EvalInstance> out;
  for (const nlohmann::json& j : read_jsonl(path))
    out.push_back(EvalInstance::from_json(j));
  return out;
}

}  // namespace dedcons
