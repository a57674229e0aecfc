#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dedcons/ruleset.hpp"
#include "dedcons/value.hpp"

namespace dedcons {

struct GraphError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// One node of a computation graph: either an input with an exact value or a
/// derived node applying a rule-set operator to earlier nodes.
struct Node {
  std::string name;
  bool is_input = false;
  Rational value;                     // inputs only
  std::string op;                     // derived only
  std::vector<std::string> parents;   // derived only
};

using Assignment = std::map<std::string, Rational>;

/// Topologically ordered computation graph (inputs first, every parent
/// strictly earlier than its child).
class ComputationGraph {
 public:
  std::string id;
  std::uint64_t seed = 0;
  std::vector<Node> nodes;

  void validate(const RuleSet& rules) const;
  const Node& node(const std::string& name) const;
  bool has_node(const std::string& name) const;
  std::size_t index_of(const std::string& name) const;

  /// Evaluates every node in topological order with exact arithmetic.
  Assignment evaluate(const RuleSet& rules) const;

  nlohmann::json to_json() const;
  static ComputationGraph from_json(const nlohmann::json& j);
};

/// A reference derivation: the ordered derived steps needed to compute the
/// target from graph inputs alone. Each step's parents are inputs or earlier
/// steps, so evaluating only the path steps reproduces the target's value.
struct Path {
  std::string target;
  std::vector<std::string> steps;  // derived node names, last == target
  int hop_count() const { return static_cast<int>(steps.size()); }

  nlohmann::json to_json() const;
  static Path from_json(const nlohmann::json& j);
};

/// One rendered chunk of a reference chain-of-thought. For derived steps,
/// text == prelude + value + tail, where value is the rendered node value;
/// the split lets callers re-emit the step with a different reported value.
struct CotStep {
  std::string name;     // empty for the leading given-values chunk
  std::string prelude;  // everything up to the reported value
  std::string value;    // rendered true value ("" for the given chunk)
  std::string tail;     // bytes after the value (step separator)
  std::string text;     // full chunk
};

/// One verbalized line per node, aligned with graph.nodes. Input lines render
/// as "  - {name} (value = {v})"; derived lines render via the style's
/// sentence template.
std::vector<std::string> verbalize_graph(const ComputationGraph& graph,
                                         const RuleSet& rules, Style style);

/// Renders the reference chain-of-thought for a path. Chunk 0 carries the
/// "- Given value of {input} = {v} ." lines for the first step's inputs;
/// every later chunk introduces any newly used inputs (preceded by a
/// newline), then the step's verbalization and its
/// "The Computed value of {name} = {v} " line, ending in the separator
/// space. Concatenating chunks [0..k] (no separator) yields the k-step
/// prefix text.
std::vector<CotStep> render_cot_steps(const ComputationGraph& graph,
                                      const RuleSet& rules, const Path& path,
                                      Style style);

/// Full question text: the whole-graph verbalization (all nodes, including
/// distractors) followed by "What is the value of {target}?".
std::string build_question_text(const ComputationGraph& graph,
                                const RuleSet& rules, Style style,
                                const std::string& target);

}  // namespace dedcons
