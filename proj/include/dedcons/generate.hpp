#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "dedcons/graph.hpp"
#include "dedcons/instance.hpp"
#include "dedcons/ruleset.hpp"

namespace dedcons {

/// Parameters for synthetic computation-graph sampling.
struct GenParams {
  int num_graphs = 1;
  int m = 60;                 ///< nodes per graph (inputs + derived)
  double unary_ratio = 0.0;   ///< probability a derived node gets a unary op
  std::string logic_mode = "arith";   ///< recorded in metadata; "arith" only
  std::string naming_mode = "noun";   ///< "noun" | "symbolic"
  std::vector<std::string> nouns;     ///< noun pool; empty -> builtin pool
  RuleSet rules;
  long long value_min = 1;
  long long value_max = 20;
  int max_hops = 24;              ///< drop question paths longer than this
  int max_graphs_per_hop = 0;     ///< per-hop undersample cap; 0 = keep all
  Style style = Style::Original;
  std::uint64_t seed = 0;

  nlohmann::json to_json() const;
};

/// Number of input nodes used for a graph of m nodes.
int input_count_for(int m);

/// Deterministic in (params.seed, graph_index).
ComputationGraph sample_graph(const GenParams& params, int graph_index);

/// One question path per derived node: the node's derived ancestors
/// (itself included) in graph order. Evaluating exactly these steps on top
/// of the graph inputs reproduces the target's value. Paths longer than
/// max_hops are dropped.
std::vector<Path> extract_paths(const ComputationGraph& graph, int max_hops);

/// A rendered question: path, question text, reference chunks, ground truth.
struct QuestionRecord {
  std::string question_id;
  std::string graph_ref;
  Style style = Style::Original;
  Path path;
  int hop_count = 0;
  std::string question_text;
  std::string target;
  std::map<std::string, std::string> ground_truth;
  std::string final_answer;
  /// chunks[0] carries the opening given lines; chunks[j] (j >= 1) is the
  /// j-th reference step. Concatenating chunks[0..k] yields the k-step
  /// reference prefix byte-for-byte.
  std::vector<CotStep> chunks;

  nlohmann::json to_json() const;
  static QuestionRecord from_json(const nlohmann::json& j);
};

QuestionRecord render_question(const ComputationGraph& graph,
                               const RuleSet& rules, Style style,
                               const Path& path);

struct GenResult {
  std::vector<ComputationGraph> graphs;
  std::vector<QuestionRecord> questions;   ///< after per-hop undersampling
  std::map<int, int> hop_histogram;        ///< kept question count per hop
};

GenResult generate_questions(const GenParams& params);

void write_questions(const std::string& path,
                     const std::vector<QuestionRecord>& questions);
std::vector<QuestionRecord> read_questions(const std::string& path);

/// Parameters for turning questions into prefixed eval instances.
struct TransformParams {
  int max_hops = 12;
  int max_items_per_hop = 120;
  int max_prefixes = 12;
  int max_prefix_length = 0;  ///< extra cap on prefix_k; 0 = unbounded
  std::uint64_t seed = 0;

  nlohmann::json to_json() const;
};

/// All prefixed instances for one question: prefix_k ranges over
/// 1..min(max_prefixes, max_prefix_length or inf, hop_count - 1).
std::vector<EvalInstance> build_prefixed_instances(const QuestionRecord& q,
                                                   const TransformParams& t);

struct BinWarning {
  int hop = 0;
  int prefix = 0;
  int available = 0;
  int quota = 0;
};

struct TransformResult {
  std::vector<EvalInstance> instances;
  std::vector<BinWarning> warnings;  ///< under-filled (hop, prefix) cells
  std::map<std::pair<int, int>, int> cell_counts;  ///< kept per (hop, prefix)
};

/// Enforce the per-(hop, prefix) quota max_items_per_hop / max_prefixes
/// (must divide evenly). Over-full cells are downsampled with a seeded
/// draw; under-full cells keep everything and emit a warning.
TransformResult bin_and_undersample(const std::vector<EvalInstance>& instances,
                                    const TransformParams& t);

/// build_prefixed_instances over all questions, then bin_and_undersample.
TransformResult transform_questions(const std::vector<QuestionRecord>& qs,
                                    const TransformParams& t);

/// Compiled-in noun pool used when no noun file is supplied.
const std::vector<std::string>& builtin_nouns();

}  // namespace dedcons
