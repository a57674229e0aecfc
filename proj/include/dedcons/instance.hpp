#pragma once

#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dedcons/graph.hpp"
#include "dedcons/ruleset.hpp"

namespace dedcons {

/// One evaluable item: a question plus a k-step reference prefix, with the
/// bookkeeping needed to score every post-prefix variable by hop.
struct EvalInstance {
  std::string instance_id;
  std::string source;       // "syndeduct" | "benchmark"
  std::string problem_id;   // question id (syndeduct) / template id (benchmark)
  int mutation_index = -1;  // benchmark only; -1 elsewhere
  std::string graph_ref;    // syndeduct only
  Style style = Style::Original;
  std::string question_text;
  std::string target;
  int prefix_k = 0;
  int hop_total = 0;
  /// Post-prefix variable -> hop index (the j-th post-prefix reference step
  /// introduces the variable at hop j; the target sits at hop_total).
  std::map<std::string, int> per_variable_hops;
  /// Exact rendered values for the instance's variables.
  std::map<std::string, std::string> ground_truth;
  std::string final_answer;
  std::string prefix_text;  // empty iff prefix_k == 0
  /// Post-prefix reference steps, in order (used by the oracle mock).
  std::vector<CotStep> continuation_steps;

  void validate() const;  ///< throws std::runtime_error on broken invariants

  nlohmann::json to_json() const;
  static EvalInstance from_json(const nlohmann::json& j);
};

void write_instances(const std::string& path,
                     const std::vector<EvalInstance>& instances);
std::vector<EvalInstance> read_instances(const std::string& path);

}  // namespace dedcons
