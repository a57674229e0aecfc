#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dedcons/instance.hpp"
#include "dedcons/ruleset.hpp"
#include "dedcons/value.hpp"

namespace dedcons {

/// One operand of a straight-line statement: a placeholder name or a literal.
struct Operand {
  std::string placeholder;          // empty when literal
  std::optional<Rational> literal;  // engaged when literal

  static Operand var(std::string name);
  static Operand lit(Rational value);

  nlohmann::json to_json() const;
  static Operand from_json(const nlohmann::json& j);
};

struct ProgramStatement {
  std::string output;
  std::string op;  // add | subtract | multiply | divide
  Operand lhs;
  Operand rhs;
};

/// Straight-line, single-assignment arithmetic program over placeholders.
struct ReferenceProgram {
  std::vector<std::string> inputs;
  std::vector<ProgramStatement> statements;

  /// Structural well-formedness: known ops, distinct outputs, operands
  /// resolve to inputs, earlier outputs, or literals. Returns problems.
  std::vector<std::string> structural_problems() const;

  /// Run on an assignment covering `inputs`; returns inputs plus every
  /// statement output. Throws ValueError on division by zero / overflow and
  /// std::runtime_error on unresolved names.
  std::map<std::string, Rational> execute(
      const std::map<std::string, Rational>& input_values) const;

  std::string final_output() const;  ///< output of the last statement

  nlohmann::json to_json() const;
  static ReferenceProgram from_json(const nlohmann::json& j);
};

/// Templatized problem with its reference program and provenance facts.
struct ProblemTemplate {
  std::string problem_id;
  std::string templatized_question;
  std::vector<std::string> templatized_answer;  // ordered step texts
  std::map<std::string, Rational> factual_assignment;
  std::map<std::string, std::string> node_explanation;
  std::vector<std::string> question_vars;
  std::string recorded_answer;  // ground-truth answer as recorded upstream
  nlohmann::json provenance;    // opaque
  ReferenceProgram program;

  nlohmann::json to_json() const;
  static ProblemTemplate from_json(const nlohmann::json& j);
};

std::vector<ProblemTemplate> read_template_corpus(const std::string& path);
void write_template_corpus(const std::string& path,
                           const std::vector<ProblemTemplate>& corpus);

struct SamplerConfig {
  double min_value = 2;
  double max_value = 100;
  int max_iter = 20;
  int mutations_per_problem = 10;
  std::uint64_t seed = 0;

  nlohmann::json to_json() const;
};

/// Outcome of the generate-then-verify checks for one problem.
struct SanityReport {
  bool structure_ok = false;        // program/template shape is usable
  bool vars_in_program = false;     // (a) factual vars all appear in program
  bool derived_consistent = false;  // (b) program reproduces non-question facts
  bool substitution_complete = false;  // (c) no placeholder left behind
  bool answer_matches = false;         // (d) final output == recorded answer
  std::vector<std::string> notes;

  bool pass() const {
    return structure_ok && vars_in_program && derived_consistent &&
           substitution_complete && answer_matches;
  }
};

SanityReport validate_template(const ProblemTemplate& tpl);

using MutAssignment = std::map<std::string, Rational>;

/// Resample the question variables. Integer-valued facts draw uniform
/// integers in [min,max]; facts in (0,1) draw uniform reals in (0,1); other
/// non-integers draw uniform reals in [min,max]. Reals carry six decimal
/// places. Candidates whose program run produces a negative value (or fails)
/// are redrawn up to max_iter times; the last candidate is then accepted.
/// Deterministic in (cfg.seed, problem_id, mutation_index).
MutAssignment sample_mutation(const ProblemTemplate& tpl,
                              const SamplerConfig& cfg, int mutation_index);

struct InstantiatedProblem {
  std::string question;
  std::vector<std::string> cot_steps;  // substituted original-style steps
  Rational final_answer;
  std::map<std::string, Rational> values;  // inputs + derived outputs
};

/// Execute the program on the assignment and substitute every placeholder.
/// Throws std::runtime_error("missing placeholder: ...") if any remains.
InstantiatedProblem instantiate(const ProblemTemplate& tpl,
                                const MutAssignment& assignment);

/// Per-step restyled sentences for a paraphrase family. Original returns the
/// substituted step texts unchanged; other styles re-render each statement
/// through the rule-set step templates, with the template's variable
/// description appended as a ", which represents ..." tail when available.
std::vector<std::string> styled_steps(const ProblemTemplate& tpl,
                                      const InstantiatedProblem& inst,
                                      Style style, const RuleSet& rules);

/// First k styled steps joined with newlines; k = 0 yields empty text.
/// Throws std::out_of_range when k exceeds the step count.
std::string build_prefix(const std::vector<std::string>& steps, int k);

/// All eval instances for one mutation of one problem: prefix_k ranges over
/// 0..min(max_prefixes, step count − 1).
std::vector<EvalInstance> build_benchmark_instances(
    const ProblemTemplate& tpl, const InstantiatedProblem& inst,
    int mutation_index, Style style, const RuleSet& rules, int max_prefixes);

/// Problem ids present in every corpus (order of the first corpus).
std::vector<std::string> support_intersection(
    const std::vector<std::vector<ProblemTemplate>>& corpora);

}  // namespace dedcons
