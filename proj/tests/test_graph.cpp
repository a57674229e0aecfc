#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <map>
#include <string>
#include <vector>

#include "dedcons/graph.hpp"
#include "dedcons/ruleset.hpp"

using namespace dedcons;

#include "example_graph_fixture.hpp"

using dedcons_test::arvelo_path;
using dedcons_test::example_graph;

namespace {

// Independent oracle: evaluate a node by recursing through its parents,
// with none of the production code's topological machinery.
Rational eval_recursive(const ComputationGraph& g, const std::string& name) {
  const Node& n = g.node(name);
  if (n.is_input) return n.value;
  const Rational a = eval_recursive(g, n.parents[0]);
  const Rational b = eval_recursive(g, n.parents[1]);
  if (n.op == "add") return a + b;
  if (n.op == "subtract") return a - b;
  throw std::runtime_error("oracle: unknown op " + n.op);
}

}  // namespace

TEST_CASE("example graph evaluates to the published values") {
  const ComputationGraph g = example_graph();
  const RuleSet rules = RuleSet::builtin();
  g.validate(rules);

  const Assignment values = g.evaluate(rules);
  CHECK(values.size() == 60);
  CHECK(values.at("Certain") == Rational(10));
  CHECK(values.at("Irtysh") == Rational(15));
  CHECK(values.at("Horstman") == Rational(-2));
  CHECK(values.at("Pellicano") == Rational(-7));
  CHECK(values.at("Taoiseach") == Rational(3));
  CHECK(values.at("Vanvalkenburg") == Rational(-5));
  CHECK(values.at("SEPA") == Rational(25));
  CHECK(values.at("Arvelo") == Rational(-32));

  // Every node agrees with the independent recursive oracle.
  for (const Node& n : g.nodes) {
    CHECK(values.at(n.name) == eval_recursive(g, n.name));
  }
}

TEST_CASE("graph validation rejects malformed graphs") {
  const RuleSet rules = RuleSet::builtin();

  ComputationGraph forward = example_graph();
  // Move a parent after its child: breaks topological ordering.
  std::swap(forward.nodes[3], forward.nodes[4]);  // Certain after Irtysh
  CHECK_THROWS_AS(forward.validate(rules), GraphError);

  ComputationGraph unknown_op = example_graph();
  unknown_op.nodes[5].op = "modulo";
  CHECK_THROWS_AS(unknown_op.validate(rules), GraphError);

  ComputationGraph duplicate = example_graph();
  duplicate.nodes[4].name = "Masako";
  CHECK_THROWS_AS(duplicate.validate(rules), GraphError);

  ComputationGraph dangling = example_graph();
  dangling.nodes[3].parents[0] = "Nowhere";
  CHECK_THROWS_AS(dangling.validate(rules), GraphError);
}

TEST_CASE("json round trip preserves structure and values") {
  const ComputationGraph g = example_graph();
  const RuleSet rules = RuleSet::builtin();
  const ComputationGraph g2 = ComputationGraph::from_json(g.to_json());
  CHECK(g2.nodes.size() == g.nodes.size());
  CHECK(g2.to_json() == g.to_json());
  CHECK(g2.evaluate(rules) == g.evaluate(rules));

  const Path p = arvelo_path();
  const Path p2 = Path::from_json(p.to_json());
  CHECK(p2.target == p.target);
  CHECK(p2.steps == p.steps);
  CHECK(p2.hop_count() == 6);
}

TEST_CASE("question text renders the whole graph") {
  const ComputationGraph g = example_graph();
  const RuleSet rules = RuleSet::builtin();
  const std::string q =
      build_question_text(g, rules, Style::Original, "Arvelo");

  const std::string head =
      "=== Graph Structure ===\n"
      "Inputs:\n"
      "  - Masako (value = 8)\n"
      "  - Nalca (value = 2)\n"
      "  - Gassman (value = 5)\n"
      "  Derived Nodes:\n"
      "  - Certain is the sum of Nalca and Masako.\n"
      "  - Irtysh is the sum of Certain and Gassman.\n"
      "  - Horstman is the difference between Masako and Certain.\n";
  CHECK(q.substr(0, head.size()) == head);

  const std::string tail = "  - Yucatec is the sum of Pellicano and Hines.\n"
                           "\n  What is the value of Arvelo?";
  REQUIRE(q.size() >= tail.size());
  CHECK(q.substr(q.size() - tail.size()) == tail);
}

TEST_CASE("reference chain-of-thought matches the published bytes") {
  const ComputationGraph g = example_graph();
  const RuleSet rules = RuleSet::builtin();
  const Path p = arvelo_path();

  const std::vector<CotStep> steps =
      render_cot_steps(g, rules, p, Style::Original);
  REQUIRE(steps.size() == 7);  // given chunk + 6 derivations

  // Given lines appear in graph listing order even though the first
  // sentence names Nalca before Masako.
  CHECK(steps[0].name.empty());
  CHECK(steps[0].text ==
        "- Given value of Masako = 8 .\n- Given value of Nalca = 2 .");

  CHECK(steps[1].name == "Certain");
  CHECK(steps[1].prelude ==
        "Certain is the sum of Nalca and Masako.\n"
        "The Computed value of Certain = ");
  CHECK(steps[1].value == "10");
  CHECK(steps[1].tail == " ");
  CHECK(steps[1].text == steps[1].prelude + steps[1].value + steps[1].tail);

  CHECK(steps[0].text + steps[1].text ==
        "- Given value of Masako = 8 .\n"
        "- Given value of Nalca = 2 ."
        "Certain is the sum of Nalca and Masako.\n"
        "The Computed value of Certain = 10 ");

  // The second derivation introduces Gassman just in time.
  CHECK(steps[2].text ==
        "\n- Given value of Gassman = 5 ."
        "Irtysh is the sum of Certain and Gassman.\n"
        "The Computed value of Irtysh = 15 ");

  // Later steps reuse already-introduced inputs without reprinting them.
  CHECK(steps[3].text ==
        "Horstman is the difference between Masako and Certain.\n"
        "The Computed value of Horstman = -2 ");
  CHECK(steps[4].text ==
        "Pellicano is the difference between Horstman and Gassman.\n"
        "The Computed value of Pellicano = -7 ");
  CHECK(steps[5].text ==
        "SEPA is the sum of Certain and Irtysh.\n"
        "The Computed value of SEPA = 25 ");
  CHECK(steps[6].text ==
        "Arvelo is the difference between Pellicano and SEPA.\n"
        "The Computed value of Arvelo = -32 ");
}

TEST_CASE("degenerate path renders only the given line") {
  const ComputationGraph g = example_graph();
  const RuleSet rules = RuleSet::builtin();
  Path p;
  p.target = "Masako";
  const std::vector<CotStep> steps =
      render_cot_steps(g, rules, p, Style::Original);
  REQUIRE(steps.size() == 1);
  CHECK(steps[0].text == "- Given value of Masako = 8 .");
  CHECK(p.hop_count() == 0);
}

TEST_CASE("style variants re-verbalize graph sentences") {
  const ComputationGraph g = example_graph();
  const RuleSet rules = RuleSet::builtin();

  const std::vector<std::string> ax =
      verbalize_graph(g, rules, Style::ParaAx);
  CHECK(ax[3] ==
        "Axiom-1 (Addition): applying ADD to Nalca and Masako yields "
        "Certain.");
  const std::vector<std::string> van =
      verbalize_graph(g, rules, Style::ParaVan);
  CHECK(van[3] == "Certain is obtained by adding Nalca and Masako together.");
  CHECK(van[5] ==
        "Horstman is what remains after taking Certain away from Masako.");
  const std::vector<std::string> rev =
      verbalize_graph(g, rules, Style::ParaRev);
  CHECK(rev[3] ==
        "Certain is the value reached, which is the sum of Nalca and "
        "Masako.");

  // Input lines are identical across styles.
  CHECK(ax[0] == "  - Masako (value = 8)");
  CHECK(van[0] == ax[0]);
}
