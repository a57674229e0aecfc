#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "dedcons/extract.hpp"
#include "dedcons/generate.hpp"
#include "dedcons/graph.hpp"

using namespace dedcons;

namespace {

GenParams desk_params() {
  GenParams p;
  p.num_graphs = 12;
  p.m = 16;
  p.rules = RuleSet::builtin();
  p.max_hops = 10;
  p.seed = 42;
  return p;
}

// Independent oracle: a node's value by direct recursion.
Rational eval_recursive(const ComputationGraph& g, const RuleSet& rules,
                        const std::string& name) {
  const Node& n = g.node(name);
  if (n.is_input) return n.value;
  std::vector<Rational> args;
  for (const auto& p : n.parents) args.push_back(eval_recursive(g, rules, p));
  return apply_op(rules.at(n.op).kind, args);
}

// Independent oracle: the set of derived ancestors of `target` (inclusive),
// found by recursive descent rather than the generator's forward pass.
void collect_cone(const ComputationGraph& g, const std::string& name,
                  std::set<std::string>& out) {
  const Node& n = g.node(name);
  if (n.is_input) return;
  if (!out.insert(name).second) return;
  for (const auto& p : n.parents) collect_cone(g, p, out);
}

}  // namespace

TEST_CASE("graph sampling is deterministic and well-formed") {
  const GenParams p = desk_params();
  for (int gi = 0; gi < 4; ++gi) {
    const ComputationGraph g = sample_graph(p, gi);
    const ComputationGraph again = sample_graph(p, gi);
    CHECK(g.to_json() == again.to_json());
    CHECK(g.id == "g" + std::to_string(gi));

    g.validate(p.rules);
    CHECK(static_cast<int>(g.nodes.size()) == p.m);

    const int inputs = input_count_for(p.m);
    std::set<std::string> names;
    for (std::size_t i = 0; i < g.nodes.size(); ++i) {
      const Node& n = g.nodes[i];
      CHECK(names.insert(n.name).second);
      if (static_cast<int>(i) < inputs) {
        CHECK(n.is_input);
        CHECK(n.value.is_integer());
        CHECK(n.value.num() >= p.value_min);
        CHECK(n.value.num() <= p.value_max);
      } else {
        CHECK_FALSE(n.is_input);
        CHECK(n.parents.size() == 2);  // unary_ratio 0 -> all binary
      }
    }
  }
  // Distinct indices give distinct graphs.
  CHECK(sample_graph(p, 0).to_json() != sample_graph(p, 1).to_json());
}

TEST_CASE("input count scales with graph size") {
  CHECK(input_count_for(12) == 2);
  CHECK(input_count_for(60) == 3);
  CHECK(input_count_for(120) == 6);
}

TEST_CASE("question paths are exactly the derived ancestor cones") {
  const GenParams p = desk_params();
  const ComputationGraph g = sample_graph(p, 0);
  const std::vector<Path> paths = extract_paths(g, /*max_hops=*/0);

  int derived = 0;
  for (const Node& n : g.nodes)
    if (!n.is_input) ++derived;
  CHECK(static_cast<int>(paths.size()) == derived);

  for (const Path& path : paths) {
    REQUIRE_FALSE(path.steps.empty());
    CHECK(path.steps.back() == path.target);
    CHECK(path.hop_count() == static_cast<int>(path.steps.size()));

    // Same membership as the recursive cone oracle...
    std::set<std::string> cone;
    collect_cone(g, path.target, cone);
    CHECK(std::set<std::string>(path.steps.begin(), path.steps.end()) ==
          cone);
    // ...in graph listing order.
    for (std::size_t i = 1; i < path.steps.size(); ++i) {
      CHECK(g.index_of(path.steps[i - 1]) < g.index_of(path.steps[i]));
    }

    // Evaluating only the path steps on top of the inputs reproduces the
    // target: build a trimmed graph holding just inputs + path steps.
    ComputationGraph trimmed;
    trimmed.id = "trimmed";
    for (const Node& n : g.nodes)
      if (n.is_input) trimmed.nodes.push_back(n);
    for (const auto& name : path.steps) trimmed.nodes.push_back(g.node(name));
    trimmed.validate(p.rules);
    CHECK(trimmed.evaluate(p.rules).at(path.target) ==
          eval_recursive(g, p.rules, path.target));
  }

  // A hop cap drops exactly the paths with larger cones.
  const std::vector<Path> capped = extract_paths(g, 3);
  int small = 0;
  for (const Path& path : paths)
    if (path.hop_count() <= 3) ++small;
  CHECK(static_cast<int>(capped.size()) == small);
  for (const Path& path : capped) CHECK(path.hop_count() <= 3);
}

TEST_CASE("rendered questions carry exact ground truth") {
  const GenParams p = desk_params();
  const GenResult gen = generate_questions(p);
  REQUIRE_FALSE(gen.questions.empty());

  int histogram_total = 0;
  for (const auto& [hop, count] : gen.hop_histogram) histogram_total += count;
  CHECK(histogram_total == static_cast<int>(gen.questions.size()));

  for (const QuestionRecord& q : gen.questions) {
    const ComputationGraph* graph = nullptr;
    for (const auto& g : gen.graphs)
      if (g.id == q.graph_ref) graph = &g;
    REQUIRE(graph != nullptr);

    CHECK(q.question_id == q.graph_ref + ":" + q.target);
    CHECK(q.hop_count == q.path.hop_count());
    CHECK(q.hop_count <= p.max_hops);
    CHECK(q.path.target == q.target);

    const std::string tail = "What is the value of " + q.target + "?";
    REQUIRE(q.question_text.size() >= tail.size());
    CHECK(q.question_text.substr(q.question_text.size() - tail.size()) ==
          tail);

    // Ground truth agrees with the recursive oracle for every step.
    for (const auto& name : q.path.steps) {
      CHECK(q.ground_truth.at(name) ==
            eval_recursive(*graph, p.rules, name).str());
    }
    CHECK(q.final_answer == q.ground_truth.at(q.target));

    // Chunk concatenation is the full reference; the pattern extractor
    // recovers every step value from it (round trip).
    std::string reference;
    for (const CotStep& c : q.chunks) reference += c.text;
    ExtractedAssignment got =
        extract_variables_pattern(reference, q.path.steps);
    for (const auto& name : q.path.steps) {
      auto truth = normalize_numeric(q.ground_truth.at(name));
      REQUIRE(truth.has_value());
      REQUIRE(got.get(name).has_value());
      CHECK(*got.get(name) == doctest::Approx(*truth).epsilon(1e-9));
      CHECK_FALSE(got.values.at(name).conflict);
    }
  }

  // Per-hop undersampling caps the histogram.
  GenParams capped = p;
  capped.max_graphs_per_hop = 2;
  const GenResult small = generate_questions(capped);
  for (const auto& [hop, count] : small.hop_histogram) CHECK(count <= 2);
}

TEST_CASE("prefix expansion covers 1..hop_count-1") {
  const GenParams p = desk_params();
  const GenResult gen = generate_questions(p);

  TransformParams t;
  t.max_hops = 10;
  t.max_items_per_hop = 40;
  t.max_prefixes = 10;
  t.seed = 7;

  bool saw_multi = false;
  for (const QuestionRecord& q : gen.questions) {
    const std::vector<EvalInstance> got = build_prefixed_instances(q, t);
    const int expect =
        std::max(0, std::min(t.max_prefixes, q.hop_count - 1));
    CHECK(static_cast<int>(got.size()) == expect);
    if (expect > 1) saw_multi = true;

    for (int k = 1; k <= expect; ++k) {
      const EvalInstance& inst = got[static_cast<size_t>(k - 1)];
      inst.validate();
      CHECK(inst.instance_id == q.question_id + ":k" + std::to_string(k));
      CHECK(inst.source == "syndeduct");
      CHECK(inst.prefix_k == k);
      CHECK(inst.hop_total == q.hop_count - k);
      CHECK(inst.target == q.target);

      // Prefix text is chunks[0..k] byte-for-byte.
      std::string prefix;
      for (int j = 0; j <= k; ++j)
        prefix += q.chunks[static_cast<size_t>(j)].text;
      CHECK(inst.prefix_text == prefix);

      // Post-prefix steps sit at hops 1..hop_total, target last.
      CHECK(static_cast<int>(inst.continuation_steps.size()) ==
            inst.hop_total);
      for (int j = 1; j <= inst.hop_total; ++j) {
        const CotStep& step =
            inst.continuation_steps[static_cast<size_t>(j - 1)];
        CHECK(step.name == q.path.steps[static_cast<size_t>(k + j - 1)]);
        CHECK(inst.per_variable_hops.at(step.name) == j);
      }
      CHECK(inst.per_variable_hops.at(inst.target) == inst.hop_total);
    }
  }
  CHECK(saw_multi);

  // A prefix-length cap tightens the range.
  TransformParams short_t = t;
  short_t.max_prefix_length = 2;
  for (const QuestionRecord& q : gen.questions) {
    const std::vector<EvalInstance> got = build_prefixed_instances(q, short_t);
    CHECK(static_cast<int>(got.size()) ==
          std::max(0, std::min({t.max_prefixes, 2, q.hop_count - 1})));
  }
}

TEST_CASE("binning enforces exact per-cell quotas") {
  const GenParams p = desk_params();
  const GenResult gen = generate_questions(p);

  TransformParams t;
  t.max_hops = 4;
  t.max_items_per_hop = 12;
  t.max_prefixes = 4;
  t.seed = 3;

  const TransformResult r = transform_questions(gen.questions, t);
  const int quota = t.max_items_per_hop / t.max_prefixes;

  std::map<std::pair<int, int>, int> recount;
  for (const EvalInstance& inst : r.instances) {
    CHECK(inst.hop_total >= 1);
    CHECK(inst.hop_total <= t.max_hops);
    CHECK(inst.prefix_k >= 1);
    CHECK(inst.prefix_k <= t.max_prefixes);
    ++recount[{inst.hop_total, inst.prefix_k}];
  }
  CHECK(recount == r.cell_counts);

  std::set<std::pair<int, int>> warned;
  for (const BinWarning& w : r.warnings) {
    CHECK(w.available < w.quota);
    CHECK(w.quota == quota);
    warned.insert({w.hop, w.prefix});
  }
  for (int hop = 1; hop <= t.max_hops; ++hop) {
    for (int k = 1; k <= t.max_prefixes; ++k) {
      auto it = recount.find({hop, k});
      const int n = it == recount.end() ? 0 : it->second;
      CHECK(n <= quota);
      if (n < quota) {
        CHECK(warned.count({hop, k}) == 1);
      } else {
        CHECK(warned.count({hop, k}) == 0);
      }
    }
  }

  // Same seed -> byte-identical selection; binning is reproducible.
  const TransformResult again = transform_questions(gen.questions, t);
  REQUIRE(again.instances.size() == r.instances.size());
  for (std::size_t i = 0; i < r.instances.size(); ++i) {
    CHECK(again.instances[i].to_json() == r.instances[i].to_json());
  }
}

TEST_CASE("binning parameter validation") {
  TransformParams bad;
  bad.max_hops = 4;
  bad.max_items_per_hop = 10;  // not divisible by max_prefixes
  bad.max_prefixes = 4;
  CHECK_THROWS_AS(bin_and_undersample({}, bad), std::invalid_argument);

  // The full-scale grid over no input warns once per cell.
  TransformParams paper;
  paper.max_hops = 12;
  paper.max_items_per_hop = 120;
  paper.max_prefixes = 12;
  const TransformResult r = bin_and_undersample({}, paper);
  CHECK(r.instances.empty());
  CHECK(r.warnings.size() == 144);
  for (const BinWarning& w : r.warnings) {
    CHECK(w.available == 0);
    CHECK(w.quota == 10);
  }
}

TEST_CASE("noun pool is usable and duplicate-free") {
  const std::vector<std::string>& nouns = builtin_nouns();
  CHECK(nouns.size() >= 200);
  std::set<std::string> unique(nouns.begin(), nouns.end());
  CHECK(unique.size() == nouns.size());
  for (const auto& n : nouns) CHECK_FALSE(n.empty());
}

TEST_CASE("question serialization round trip") {
  const GenParams p = desk_params();
  const GenResult gen = generate_questions(p);
  REQUIRE_FALSE(gen.questions.empty());
  const QuestionRecord& q = gen.questions.front();
  const QuestionRecord q2 = QuestionRecord::from_json(q.to_json());
  CHECK(q2.to_json() == q.to_json());
  CHECK(q2.question_text == q.question_text);
  CHECK(q2.chunks.size() == q.chunks.size());
  for (std::size_t i = 0; i < q.chunks.size(); ++i) {
    CHECK(q2.chunks[i].text == q.chunks[i].text);
  }
}
