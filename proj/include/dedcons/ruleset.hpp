#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dedcons/value.hpp"

namespace dedcons {

/// Verbalization styles for graph sentences and reference-solution steps.
enum class Style { Original, ParaAx, ParaVan, ParaRev };

std::string style_name(Style s);
std::optional<Style> parse_style(const std::string& name);

/// parse_style, but throws std::invalid_argument on an unknown name.
Style require_style(const std::string& name);

/// Closed operator vocabulary. The "function" text carried by rule-set files
/// is documentation only and is never evaluated; semantics come from here.
enum class OpKind { Add, Subtract, Multiply, Divide, Square };

struct OperatorSpec {
  std::string name;
  int arity = 2;
  OpKind kind = OpKind::Add;
  std::string doc;  ///< opaque "function" field from the rule-set file
  std::string verbalization;  ///< Original-style graph sentence template
  /// Graph-context sentence templates for the paraphrase styles
  /// (placeholders {child}, {parent1}, {parent2}/{parent}, {axiom}).
  std::map<Style, std::string> graph_templates;
  /// Value-context step templates used when restyling reference-solution
  /// steps (placeholders {a}, {b}, {c}, {axiom}).
  std::map<Style, std::string> step_templates;
};

class RuleSet {
 public:
  static RuleSet builtin();  ///< add + subtract, the default rule set
  static RuleSet arithmetic();  ///< add, subtract, multiply, divide
  static OperatorSpec make_operator(const std::string& name);

  /// Accepts both the canonical {"operators": [...]} layout and the legacy
  /// map layout {"add": {"function": ..., "verbalization": ...}, ...}.
  static RuleSet from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;

  void validate() const;  ///< throws std::runtime_error on malformed sets

  const std::vector<OperatorSpec>& operators() const { return ops_; }
  const OperatorSpec* find(const std::string& name) const;
  const OperatorSpec& at(const std::string& name) const;
  /// 1-based position of the operator, used as the axiom number in the
  /// "Axiom-n (...)" paraphrase family.
  int axiom_index(const std::string& name) const;
  std::vector<const OperatorSpec*> binary_ops() const;
  std::vector<const OperatorSpec*> unary_ops() const;

  void add_operator(OperatorSpec op) { ops_.push_back(std::move(op)); }

 private:
  std::vector<OperatorSpec> ops_;
};

/// Applies an operator to already-evaluated operand values.
Rational apply_op(OpKind kind, const std::vector<Rational>& args);

/// Replaces "{key}" placeholders; unknown placeholders are left intact.
std::string fill_template(const std::string& tmpl,
                          const std::map<std::string, std::string>& values);

/// Renders one graph-context sentence for a derived node.
std::string render_graph_sentence(const RuleSet& rules,
                                  const OperatorSpec& op, Style style,
                                  const std::string& child,
                                  const std::vector<std::string>& parents);

/// Renders one value-context step sentence (paraphrase styles only).
std::string render_step_sentence(const RuleSet& rules, const OperatorSpec& op,
                                 Style style,
                                 const std::vector<std::string>& operands,
                                 const std::string& result);

}  // namespace dedcons
