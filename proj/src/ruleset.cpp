#include "dedcons/ruleset.hpp"

#include <set>
#include <stdexcept>

namespace dedcons {

namespace {

struct OpInfo {
  OpKind kind;
  int arity;
  const char* title;    // "Addition"
  const char* opcode;   // "ADD"
  const char* noun;     // "sum"
  const char* doc;      // opaque lambda text carried by rule-set files
  const char* verbalization;
};

const std::map<std::string, OpInfo>& op_table() {
  static const std::map<std::string, OpInfo> table = {
      {"add",
       {OpKind::Add, 2, "Addition", "ADD", "sum", "lambda x, y: x + y",
        "{child} is the sum of {parent1} and {parent2}."}},
      {"subtract",
       {OpKind::Subtract, 2, "Subtraction", "SUB", "difference",
        "lambda x, y: x - y",
        "{child} is the difference between {parent1} and {parent2}."}},
      {"multiply",
       {OpKind::Multiply, 2, "Multiplication", "MUL", "product",
        "lambda x, y: x * y",
        "{child} is the product of {parent1} and {parent2}."}},
      {"divide",
       {OpKind::Divide, 2, "Division", "DIV", "quotient",
        "lambda x, y: x / y",
        "{child} is the quotient of {parent1} and {parent2}."}},
      {"square",
       {OpKind::Square, 1, "Square", "SQ", "square", "lambda x: x * x",
        "{child} is the square of {parent}."}},
  };
  return table;
}

const OpInfo& info_for(const std::string& name) {
  auto it = op_table().find(name);
  if (it == op_table().end()) {
    throw std::runtime_error("unknown operator \"" + name +
                             "\" (vocabulary: add, subtract, multiply, "
                             "divide, square)");
  }
  return it->second;
}

std::map<Style, std::string> default_graph_templates(const std::string& name,
                                                     const OpInfo& info) {
  std::map<Style, std::string> t;
  std::string axiom = std::string("Axiom-{axiom} (") + info.title + ")";
  if (info.arity == 2) {
    t[Style::ParaAx] = axiom + ": applying " + info.opcode +
                       " to {parent1} and {parent2} yields {child}.";
    t[Style::ParaRev] = std::string("{child} is the value reached, which is "
                                    "the ") +
                        info.noun + " of {parent1} and {parent2}.";
    if (name == "add") {
      t[Style::ParaVan] = "{child} is obtained by adding {parent1} and "
                          "{parent2} together.";
      t[Style::ParaRev] = "{child} is the value reached, which is the sum of "
                          "{parent1} and {parent2}.";
    } else if (name == "subtract") {
      t[Style::ParaVan] = "{child} is what remains after taking {parent2} "
                          "away from {parent1}.";
      t[Style::ParaRev] = "{child} is the value reached, which is the "
                          "difference between {parent1} and {parent2}.";
    } else if (name == "multiply") {
      t[Style::ParaVan] =
          "{child} is obtained by multiplying {parent1} by {parent2}.";
    } else {
      t[Style::ParaVan] =
          "{child} is obtained by dividing {parent1} by {parent2}.";
    }
  } else {
    t[Style::ParaAx] =
        axiom + ": applying " + info.opcode + " to {parent} yields {child}.";
    t[Style::ParaVan] =
        "{child} is obtained by multiplying {parent} by itself.";
    t[Style::ParaRev] =
        "{child} is the value reached, which is the square of {parent}.";
  }
  return t;
}

std::map<Style, std::string> default_step_templates(const std::string& name,
                                                    const OpInfo& info) {
  std::map<Style, std::string> t;
  if (info.arity == 2) {
    t[Style::ParaAx] = std::string("Axiom-{axiom} (") + info.title +
                       "): Given two numerical values x and y, the operation " +
                       info.opcode + "(x, y) yields their arithmetic " +
                       info.noun + ", thus " + info.opcode +
                       "({a}, {b}) yields {c}.";
    t[Style::ParaRev] = std::string("The result is {c}, which is the ") +
                        info.noun + " of {a} and {b}.";
    if (name == "add") {
      t[Style::ParaVan] = "Taking {a} together with {b} totals to {c}.";
    } else if (name == "subtract") {
      t[Style::ParaVan] = "Starting from {a} and removing {b} leaves {c}.";
    } else if (name == "multiply") {
      t[Style::ParaVan] = "Taking {a} groups of {b} amounts to {c}.";
    } else {
      t[Style::ParaVan] = "Splitting {a} into {b} equal parts gives {c}.";
    }
  } else {
    t[Style::ParaAx] = std::string("Axiom-{axiom} (") + info.title +
                       "): Given a numerical value x, the operation " +
                       info.opcode + "(x) yields its " + info.noun + ", thus " +
                       info.opcode + "({a}) yields {c}.";
    t[Style::ParaVan] = "Multiplying {a} by itself results in {c}.";
    t[Style::ParaRev] = "The result is {c}, which is the square of {a}.";
  }
  return t;
}

}  // namespace

std::string style_name(Style s) {
  switch (s) {
    case Style::Original: return "original";
    case Style::ParaAx: return "para_ax";
    case Style::ParaVan: return "para_van";
    case Style::ParaRev: return "para_rev";
  }
  return "original";
}

std::optional<Style> parse_style(const std::string& name) {
  if (name == "original") return Style::Original;
  if (name == "para_ax" || name == "para-ax") return Style::ParaAx;
  if (name == "para_van" || name == "para-van") return Style::ParaVan;
  if (name == "para_rev" || name == "para-rev") return Style::ParaRev;
  return std::nullopt;
}

Style require_style(const std::string& name) {
  std::optional<Style> s = parse_style(name);
  if (!s) throw std::invalid_argument("unknown style: " + name);
  return *s;
}

OperatorSpec RuleSet::make_operator(const std::string& name) {
  const OpInfo& info = info_for(name);
  OperatorSpec op;
  op.name = name;
  op.arity = info.arity;
  op.kind = info.kind;
  op.doc = info.doc;
  op.verbalization = info.verbalization;
  op.graph_templates = default_graph_templates(name, info);
  op.step_templates = default_step_templates(name, info);
  return op;
}

RuleSet RuleSet::builtin() {
  RuleSet r;
  r.add_operator(make_operator("add"));
  r.add_operator(make_operator("subtract"));
  return r;
}

RuleSet RuleSet::arithmetic() {
  RuleSet r;
  r.add_operator(make_operator("add"));
  r.add_operator(make_operator("subtract"));
  r.add_operator(make_operator("multiply"));
  r.add_operator(make_operator("divide"));
  return r;
}

RuleSet RuleSet::from_json(const nlohmann::json& j) {
  RuleSet r;
  auto load_one = [](const std::string& name, const nlohmann::json& body) {
    OperatorSpec op = make_operator(name);
    if (body.contains("function")) op.doc = body.at("function").get<std::string>();
    if (body.contains("verbalization")) {
      op.verbalization = body.at("verbalization").get<std::string>();
    }
    if (body.contains("styles")) {
      for (auto& [key, tmpl] : body.at("styles").items()) {
        auto style = parse_style(key);
        if (!style || *style == Style::Original) {
          throw std::runtime_error("rule set: unknown style key \"" + key +
                                   "\"");
        }
        op.graph_templates[*style] = tmpl.get<std::string>();
      }
    }
    if (body.contains("step_styles")) {
      for (auto& [key, tmpl] : body.at("step_styles").items()) {
        auto style = parse_style(key);
        if (!style || *style == Style::Original) {
          throw std::runtime_error("rule set: unknown style key \"" + key +
                                   "\"");
        }
        op.step_templates[*style] = tmpl.get<std::string>();
      }
    }
    return op;
  };

  if (j.contains("operators")) {
    for (const auto& entry : j.at("operators")) {
      r.add_operator(load_one(entry.at("name").get<std::string>(), entry));
    }
  } else {
    for (auto& [name, body] : j.items()) {
      r.add_operator(load_one(name, body));
    }
  }
  r.validate();
  return r;
}

nlohmann::json RuleSet::to_json() const {
  nlohmann::json ops = nlohmann::json::array();
  for (const auto& op : ops_) {
    nlohmann::json styles, step_styles;
    for (const auto& [style, tmpl] : op.graph_templates) {
      styles[style_name(style)] = tmpl;
    }
    for (const auto& [style, tmpl] : op.step_templates) {
      step_styles[style_name(style)] = tmpl;
    }
    ops.push_back({{"name", op.name},
                   {"arity", op.arity},
                   {"function", op.doc},
                   {"verbalization", op.verbalization},
                   {"styles", styles},
                   {"step_styles", step_styles}});
  }
  return nlohmann::json{{"operators", ops}};
}

void RuleSet::validate() const {
  if (ops_.empty()) throw std::runtime_error("rule set: no operators");
  std::set<std::string> seen;
  bool has_binary = false;
  for (const auto& op : ops_) {
    if (!seen.insert(op.name).second) {
      throw std::runtime_error("rule set: duplicate operator \"" + op.name +
                               "\"");
    }
    const OpInfo& info = info_for(op.name);
    if (op.arity != info.arity) {
      throw std::runtime_error("rule set: operator \"" + op.name +
                               "\" must have arity " +
                               std::to_string(info.arity));
    }
    if (op.verbalization.find("{child}") == std::string::npos) {
      throw std::runtime_error("rule set: verbalization for \"" + op.name +
                               "\" lacks {child}");
    }
    const char* needed = op.arity == 2 ? "{parent1}" : "{parent}";
    if (op.verbalization.find(needed) == std::string::npos) {
      throw std::runtime_error("rule set: verbalization for \"" + op.name +
                               "\" lacks " + needed);
    }
    if (op.arity == 2) has_binary = true;
  }
  if (!has_binary) {
    throw std::runtime_error("rule set: needs at least one binary operator");
  }
}

const OperatorSpec* RuleSet::find(const std::string& name) const {
  for (const auto& op : ops_) {
    if (op.name == name) return &op;
  }
  return nullptr;
}

const OperatorSpec& RuleSet::at(const std::string& name) const {
  const OperatorSpec* op = find(name);
  if (!op) throw std::runtime_error("rule set: no operator \"" + name + "\"");
  return *op;
}

int RuleSet::axiom_index(const std::string& name) const {
  for (std::size_t i = 0; i < ops_.size(); ++i) {
    if (ops_[i].name == name) return static_cast<int>(i) + 1;
  }
  throw std::runtime_error("rule set: no operator \"" + name + "\"");
}

std::vector<const OperatorSpec*> RuleSet::binary_ops() const {
  std::vector<const OperatorSpec*> out;
  for (const auto& op : ops_) {
    if (op.arity == 2) out.push_back(&op);
  }
  return out;
}

std::vector<const OperatorSpec*> RuleSet::unary_ops() const {
  std::vector<const OperatorSpec*> out;
  for (const auto& op : ops_) {
    if (op.arity == 1) out.push_back(&op);
  }
  return out;
}

Rational apply_op(OpKind kind, const std::vector<Rational>& args) {
  switch (kind) {
    case OpKind::Add: return args.at(0) + args.at(1);
    case OpKind::Subtract: return args.at(0) - args.at(1);
    case OpKind::Multiply: return args.at(0) * args.at(1);
    case OpKind::Divide: return args.at(0) / args.at(1);
    case OpKind::Square: return args.at(0) * args.at(0);
  }
  throw std::runtime_error("unreachable operator kind");
}

std::string fill_template(const std::string& tmpl,
                          const std::map<std::string, std::string>& values) {
  std::string out;
  out.reserve(tmpl.size());
  std::size_t i = 0;
  while (i < tmpl.size()) {
    if (tmpl[i] == '{') {
      std::size_t close = tmpl.find('}', i);
      if (close != std::string::npos) {
        auto it = values.find(tmpl.substr(i + 1, close - i - 1));
        if (it != values.end()) {
          out += it->second;
          i = close + 1;
          continue;
        }
      }
    }
    out += tmpl[i++];
  }
  return out;
}

std::string render_graph_sentence(const RuleSet& rules,
                                  const OperatorSpec& op, Style style,
                                  const std::string& child,
                                  const std::vector<std::string>& parents) {
  std::map<std::string, std::string> vals{{"child", child}};
  if (op.arity == 2) {
    vals["parent1"] = parents.at(0);
    vals["parent2"] = parents.at(1);
  } else {
    vals["parent"] = parents.at(0);
  }
  vals["axiom"] = std::to_string(rules.axiom_index(op.name));
  if (style == Style::Original) return fill_template(op.verbalization, vals);
  auto it = op.graph_templates.find(style);
  if (it == op.graph_templates.end()) {
    return fill_template(op.verbalization, vals);
  }
  return fill_template(it->second, vals);
}

std::string render_step_sentence(const RuleSet& rules, const OperatorSpec& op,
                                 Style style,
                                 const std::vector<std::string>& operands,
                                 const std::string& result) {
  std::map<std::string, std::string> vals{{"c", result}};
  vals["a"] = operands.at(0);
  if (operands.size() > 1) vals["b"] = operands.at(1);
  vals["axiom"] = std::to_string(rules.axiom_index(op.name));
  auto it = op.step_templates.find(style);
  if (it == op.step_templates.end()) {
    throw std::runtime_error("no step template for style " +
                             style_name(style) + " on operator " + op.name);
  }
  return fill_template(it->second, vals);
}

}  // namespace dedcons
