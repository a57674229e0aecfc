#include "dedcons/graph.hpp"

#include <algorithm>
#include <set>

namespace dedcons {

void ComputationGraph::validate(const RuleSet& rules) const {
  std::set<std::string> seen;
  bool derived_started = false;
  for (const auto& n : nodes) {
    if (n.name.empty()) throw GraphError("graph " + id + ": empty node name");
    if (!seen.insert(n.name).second) {
      throw GraphError("graph " + id + ": duplicate node \"" + n.name + "\"");
    }
    if (n.is_input) {
      if (derived_started) {
        throw GraphError("graph " + id + ": input \"" + n.name +
                         "\" after a derived node");
      }
      if (!n.parents.empty()) {
        throw GraphError("graph " + id + ": input \"" + n.name +
                         "\" has parents");
      }
    } else {
      derived_started = true;
      const OperatorSpec* op = rules.find(n.op);
      if (!op) {
        throw GraphError("graph " + id + ": node \"" + n.name +
                         "\" uses unknown operator \"" + n.op + "\"");
      }
      if (static_cast<int>(n.parents.size()) != op->arity) {
        throw GraphError("graph " + id + ": node \"" + n.name + "\" needs " +
                         std::to_string(op->arity) + " parents");
      }
      for (const auto& p : n.parents) {
        if (!seen.count(p)) {
          throw GraphError("graph " + id + ": node \"" + n.name +
                           "\" references \"" + p +
                           "\" which is not an earlier node");
        }
      }
    }
  }
}

const Node& ComputationGraph::node(const std::string& name) const {
  return nodes[index_of(name)];
}

bool ComputationGraph::has_node(const std::string& name) const {
  for (const auto& n : nodes) {
    if (n.name == name) return true;
  }
  return false;
}

std::size_t ComputationGraph::index_of(const std::string& name) const {
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (nodes[i].name == name) return i;
  }
  throw GraphError("graph " + id + ": no node \"" + name + "\"");
}

Assignment ComputationGraph::evaluate(const RuleSet& rules) const {
  Assignment values;
  for (const auto& n : nodes) {
    if (n.is_input) {
      values[n.name] = n.value;
      continue;
    }
    const OperatorSpec& op = rules.at(n.op);
    std::vector<Rational> args;
    args.reserve(n.parents.size());
    for (const auto& p : n.parents) {
      auto it = values.find(p);
      if (it == values.end()) {
        throw GraphError("graph " + id + ": node \"" + n.name +
                         "\" evaluated before parent \"" + p + "\"");
      }
      args.push_back(it->second);
    }
    values[n.name] = apply_op(op.kind, args);
  }
  return values;
}

nlohmann::json ComputationGraph::to_json() const {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& n : nodes) {
    if (n.is_input) {
      arr.push_back({{"name", n.name}, {"value", n.value.str()}});
    } else {
      arr.push_back({{"name", n.name}, {"op", n.op}, {"parents", n.parents}});
    }
  }
  return nlohmann::json{{"id", id}, {"seed", seed}, {"nodes", arr}};
}

ComputationGraph ComputationGraph::from_json(const nlohmann::json& j) {
  ComputationGraph g;
  g.id = j.value("id", "");
  g.seed = j.value("seed", std::uint64_t{0});
  for (const auto& entry : j.at("nodes")) {
    Node n;
    n.name = entry.at("name").get<std::string>();
    if (entry.contains("value")) {
      n.is_input = true;
      std::string text = entry.at("value").is_string()
                             ? entry.at("value").get<std::string>()
                             : entry.at("value").dump();
      auto v = Rational::parse(text);
      if (!v) {
        throw GraphError("graph " + g.id + ": unparseable value \"" + text +
                         "\" for input \"" + n.name + "\"");
      }
      n.value = *v;
    } else {
      n.op = entry.at("op").get<std::string>();
      n.parents = entry.at("parents").get<std::vector<std::string>>();
    }
    g.nodes.push_back(std::move(n));
  }
  return g;
}

nlohmann::json Path::to_json() const {
  return nlohmann::json{{"target", target}, {"steps", steps}};
}

Path Path::from_json(const nlohmann::json& j) {
  Path p;
  p.target = j.at("target").get<std::string>();
  p.steps = j.at("steps").get<std::vector<std::string>>();
  return p;
}

std::vector<std::string> verbalize_graph(const ComputationGraph& graph,
                                         const RuleSet& rules, Style style) {
  std::vector<std::string> lines;
  lines.reserve(graph.nodes.size());
  for (const auto& n : graph.nodes) {
    if (n.is_input) {
      lines.push_back("  - " + n.name + " (value = " + n.value.str() + ")");
    } else {
      lines.push_back(render_graph_sentence(rules, rules.at(n.op), style,
                                            n.name, n.parents));
    }
  }
  return lines;
}

std::vector<CotStep> render_cot_steps(const ComputationGraph& graph,
                                      const RuleSet& rules, const Path& path,
                                      Style style) {
  Assignment values = graph.evaluate(rules);
  std::set<std::string> introduced;

  auto given_line = [&](const std::string& input) {
    return "- Given value of " + input + " = " + values.at(input).str() + " .";
  };

  // New given lines always appear in graph listing order, regardless of the
  // operand order inside the step's sentence.
  auto new_inputs_for = [&](const Node& n) {
    std::vector<std::string> fresh;
    for (const auto& p : n.parents) {
      if (graph.node(p).is_input && introduced.insert(p).second) {
        fresh.push_back(p);
      }
    }
    std::sort(fresh.begin(), fresh.end(),
              [&](const std::string& a, const std::string& b) {
                return graph.index_of(a) < graph.index_of(b);
              });
    return fresh;
  };

  std::vector<CotStep> steps;
  CotStep given;
  if (path.steps.empty()) {
    // Degenerate path: the target itself is an input.
    if (!path.target.empty() && graph.node(path.target).is_input) {
      given.text = given_line(path.target);
    }
    steps.push_back(std::move(given));
    return steps;
  }

  // Chunk 0: the inputs consumed by the first derived step.
  {
    std::string text;
    for (const auto& p : new_inputs_for(graph.node(path.steps.front()))) {
      if (!text.empty()) text += "\n";
      text += given_line(p);
    }
    given.text = std::move(text);
    steps.push_back(std::move(given));
  }

  for (std::size_t j = 0; j < path.steps.size(); ++j) {
    const Node& n = graph.node(path.steps[j]);
    CotStep step;
    step.name = n.name;
    std::string prelude;
    if (j > 0) {
      // Newly used inputs appear just in time, one given line each,
      // introduced by a newline. With no new inputs, the previous chunk's
      // trailing space is the only separator.
      for (const auto& p : new_inputs_for(n)) {
        prelude += "\n";
        prelude += given_line(p);
      }
    }
    prelude += render_graph_sentence(rules, rules.at(n.op), style, n.name,
                                     n.parents);
    prelude += "\nThe Computed value of " + n.name + " = ";
    step.prelude = std::move(prelude);
    step.value = values.at(n.name).str();
    step.tail = " ";
    step.text = step.prelude + step.value + step.tail;
    steps.push_back(std::move(step));
  }
  return steps;
}

std::string build_question_text(const ComputationGraph& graph,
                                const RuleSet& rules, Style style,
                                const std::string& target) {
  std::vector<std::string> lines = verbalize_graph(graph, rules, style);
  std::string out = "=== Graph Structure ===\nInputs:\n";
  bool derived_header = false;
  for (std::size_t i = 0; i < graph.nodes.size(); ++i) {
    if (graph.nodes[i].is_input) {
      out += lines[i] + "\n";
    } else {
      if (!derived_header) {
        out += "  Derived Nodes:\n";
        derived_header = true;
      }
      out += "  - " + lines[i] + "\n";
    }
  }
  out += "\n  What is the value of " + target + "?";
  return out;
}

}  // namespace dedcons
