#pragma once

#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "dedcons/instance.hpp"
#include "dedcons/ruleset.hpp"

namespace dedcons {

/// Fully assembled chat prompt for one instance.
struct PromptBundle {
  std::string system_text;
  std::string user_text;
  std::optional<std::string> assistant_prefill;  // present iff prefix_k >= 1
  std::string instance_ref;

  nlohmann::json to_json() const;
  static PromptBundle from_json(const nlohmann::json& j);
};

/// Prompt-building context: the rule set rendered into the synthetic-graph
/// system prompt.
struct PromptTemplates {
  RuleSet rules = RuleSet::builtin();
};

/// System prompt for synthetic-graph instances: task rules with the rule
/// set's verbalizations and the fixed in-context example.
std::string syndeduct_system_prompt(const RuleSet& rules, Style style);

/// System prompt for natural-benchmark (word-problem) instances.
std::string benchmark_system_prompt();

PromptBundle build_prompt(const EvalInstance& instance,
                          const PromptTemplates& templates);

/// Variable-extractor prompts: reply must carry a <JSON>{...}</JSON> object
/// mapping each dictionary variable to a string value or "None".
std::string extractor_system_prompt();
std::string extractor_user_prompt(const std::string& question,
                                  const std::string& solution,
                                  const nlohmann::json& variable_dictionary,
                                  const std::string& template_hint);

/// Error-category judge prompts (optional pass-through feature).
std::string judge_system_prompt();
std::string judge_user_prompt(const std::string& question,
                              const std::string& reference_answer,
                              const std::string& response);

}  // namespace dedcons
