#include "dedcons/mutate.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>
#include <stdexcept>

#include "dedcons/rng.hpp"
#include "dedcons/util.hpp"

namespace dedcons {

namespace {

OpKind op_kind_for(const std::string& op) {
  if (op == "add") return OpKind::Add;
  if (op == "subtract") return OpKind::Subtract;
  if (op == "multiply") return OpKind::Multiply;
  if (op == "divide") return OpKind::Divide;
  throw std::runtime_error("unknown operator: " + op);
}

bool known_op(const std::string& op) {
  return op == "add" || op == "subtract" || op == "multiply" || op == "divide";
}

bool placeholder_char(char c, bool first) {
  if (first) return std::isalpha(static_cast<unsigned char>(c)) || c == '_';
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
}

/// Placeholder tokens ({name}) remaining in a text.
std::vector<std::string> find_placeholders(const std::string& text) {
  std::vector<std::string> out;
  for (size_t i = 0; i < text.size(); ++i) {
    if (text[i] != '{') continue;
    size_t close = text.find('}', i + 1);
    if (close == std::string::npos || close == i + 1) continue;
    std::string inner = text.substr(i + 1, close - i - 1);
    bool ok = placeholder_char(inner[0], true);
    for (size_t j = 1; ok && j < inner.size(); ++j)
      ok = placeholder_char(inner[j], false);
    if (ok) {
      out.push_back(inner);
      i = close;
    }
  }
  return out;
}

std::string substitute(const std::string& text,
                       const std::map<std::string, Rational>& values) {
  std::string out = text;
  for (const auto& [name, value] : values) {
    const std::string token = "{" + name + "}";
    const std::string rendered = value.str();
    size_t pos = 0;
    while ((pos = out.find(token, pos)) != std::string::npos) {
      out.replace(pos, token.size(), rendered);
      pos += rendered.size();
    }
  }
  return out;
}

Rational parse_literal_json(const nlohmann::json& j) {
  if (j.is_number_integer()) return Rational(j.get<long long>());
  if (j.is_number_float()) {
    auto parsed = Rational::parse(nlohmann::json(j).dump());
    if (parsed) return *parsed;
    throw std::runtime_error("unrepresentable literal");
  }
  if (j.is_string()) {
    auto parsed = Rational::parse(j.get<std::string>());
    if (parsed) return *parsed;
  }
  throw std::runtime_error("bad numeric literal: " + j.dump());
}

nlohmann::json literal_to_json(const Rational& v) {
  if (v.is_integer()) return nlohmann::json(v.num());
  // Exact fraction form: str() would round through %.6g.
  return nlohmann::json(std::to_string(v.num()) + "/" +
                        std::to_string(v.den()));
}

}  // namespace

Operand Operand::var(std::string name) {
  Operand o;
  o.placeholder = std::move(name);
  return o;
}

Operand Operand::lit(Rational value) {
  Operand o;
  o.literal = std::move(value);
  return o;
}

nlohmann::json Operand::to_json() const {
  if (literal) return literal_to_json(*literal);
  return nlohmann::json(placeholder);
}

Operand Operand::from_json(const nlohmann::json& j) {
  if (j.is_string()) {
    const std::string s = j.get<std::string>();
    // Strings are placeholders unless they read as a number (exact literals
    // such as "12/7" are carried as strings).
    if (!s.empty() && placeholder_char(s[0], true)) return var(s);
    auto parsed = Rational::parse(s);
    if (parsed) return lit(*parsed);
    return var(s);
  }
  if (j.is_object() && j.contains("literal"))
    return lit(parse_literal_json(j.at("literal")));
  return lit(parse_literal_json(j));
}

std::vector<std::string> ReferenceProgram::structural_problems() const {
  std::vector<std::string> problems;
  if (statements.empty()) problems.push_back("program has no statements");
  std::set<std::string> defined(inputs.begin(), inputs.end());
  if (defined.size() != inputs.size())
    problems.push_back("duplicate program inputs");
  for (size_t i = 0; i < statements.size(); ++i) {
    const ProgramStatement& st = statements[i];
    const std::string where = "statement " + std::to_string(i + 1);
    if (!known_op(st.op)) problems.push_back(where + ": unknown op " + st.op);
    if (st.output.empty()) problems.push_back(where + ": missing output");
    if (defined.count(st.output))
      problems.push_back(where + ": reassigns " + st.output);
    for (const Operand* operand : {&st.lhs, &st.rhs}) {
      if (operand->literal) continue;
      if (operand->placeholder.empty())
        problems.push_back(where + ": empty operand");
      else if (!defined.count(operand->placeholder))
        problems.push_back(where + ": undefined operand " +
                           operand->placeholder);
    }
    defined.insert(st.output);
  }
  return problems;
}

std::map<std::string, Rational> ReferenceProgram::execute(
    const std::map<std::string, Rational>& input_values) const {
  std::map<std::string, Rational> values;
  for (const std::string& name : inputs) {
    auto it = input_values.find(name);
    if (it == input_values.end())
      throw std::runtime_error("missing placeholder: " + name);
    values.emplace(name, it->second);
  }
  auto resolve = [&](const Operand& o) -> Rational {
    if (o.literal) return *o.literal;
    auto it = values.find(o.placeholder);
    if (it == values.end())
      throw std::runtime_error("missing placeholder: " + o.placeholder);
    return it->second;
  };
  for (const ProgramStatement& st : statements) {
    Rational v = apply_op(op_kind_for(st.op), {resolve(st.lhs), resolve(st.rhs)});
    values[st.output] = v;
  }
  return values;
}

std::string ReferenceProgram::final_output() const {
  if (statements.empty()) throw std::runtime_error("empty program");
  return statements.back().output;
}

nlohmann::json ReferenceProgram::to_json() const {
  nlohmann::json j;
  j["inputs"] = inputs;
  nlohmann::json st_list = nlohmann::json::array();
  for (const ProgramStatement& st : statements) {
    st_list.push_back({{"output", st.output},
                       {"op", st.op},
                       {"operands", {st.lhs.to_json(), st.rhs.to_json()}}});
  }
  j["statements"] = std::move(st_list);
  return j;
}

ReferenceProgram ReferenceProgram::from_json(const nlohmann::json& j) {
  ReferenceProgram p;
  p.inputs = j.at("inputs").get<std::vector<std::string>>();
  for (const nlohmann::json& st : j.at("statements")) {
    ProgramStatement out;
    out.output = st.at("output").get<std::string>();
    out.op = st.at("op").get<std::string>();
    const nlohmann::json& operands = st.at("operands");
    if (!operands.is_array() || operands.size() != 2)
      throw std::runtime_error("statement needs exactly two operands");
    out.lhs = Operand::from_json(operands[0]);
    out.rhs = Operand::from_json(operands[1]);
    p.statements.push_back(std::move(out));
  }
  return p;
}

nlohmann::json ProblemTemplate::to_json() const {
  nlohmann::json fa;
  for (const auto& [name, value] : factual_assignment)
    fa[name] = literal_to_json(value);
  nlohmann::json j;
  j["problem_id"] = problem_id;
  j["template"] = {{"templatized_question", templatized_question},
                   {"templatized_answer", templatized_answer},
                   {"factual_assignment", std::move(fa)},
                   {"node_explanation", node_explanation},
                   {"question_vars", question_vars},
                   {"recorded_answer", recorded_answer}};
  j["program"] = program.to_json();
  if (!provenance.is_null()) j["provenance"] = provenance;
  return j;
}

ProblemTemplate ProblemTemplate::from_json(const nlohmann::json& j) {
  ProblemTemplate t;
  t.problem_id = j.at("problem_id").get<std::string>();
  const nlohmann::json& tpl = j.at("template");
  t.templatized_question = tpl.at("templatized_question").get<std::string>();
  t.templatized_answer =
      tpl.at("templatized_answer").get<std::vector<std::string>>();
  for (const auto& [name, value] : tpl.at("factual_assignment").items())
    t.factual_assignment.emplace(name, parse_literal_json(value));
  if (tpl.contains("node_explanation"))
    t.node_explanation =
        tpl.at("node_explanation").get<std::map<std::string, std::string>>();
  t.question_vars = tpl.at("question_vars").get<std::vector<std::string>>();
  t.recorded_answer = tpl.at("recorded_answer").get<std::string>();
  t.program = ReferenceProgram::from_json(j.at("program"));
  if (j.contains("provenance")) t.provenance = j.at("provenance");
  return t;
}

std::vector<ProblemTemplate> read_template_corpus(const std::string& path) {
  std::vector<ProblemTemplate> out;
  for (const nlohmann::json& j : read_jsonl(path))
    out.push_back(ProblemTemplate::from_json(j));
  return out;
}

void write_template_corpus(const std::string& path,
                           const std::vector<ProblemTemplate>& corpus) {
  std::vector<nlohmann::json> lines;
  lines.reserve(corpus.size());
  for (const ProblemTemplate& t : corpus) lines.push_back(t.to_json());
  write_jsonl(path, lines);
}

nlohmann::json SamplerConfig::to_json() const {
  return {{"min_value", min_value},
          {"max_value", max_value},
          {"max_iter", max_iter},
          {"mutations_per_problem", mutations_per_problem},
          {"seed", seed}};
}

SanityReport validate_template(const ProblemTemplate& tpl) {
  SanityReport report;

  std::vector<std::string> problems = tpl.program.structural_problems();
  std::set<std::string> inputs(tpl.program.inputs.begin(),
                               tpl.program.inputs.end());
  std::set<std::string> qvars(tpl.question_vars.begin(),
                              tpl.question_vars.end());
  if (inputs != qvars)
    problems.push_back("program inputs differ from question variables");
  if (tpl.templatized_answer.size() != tpl.program.statements.size())
    problems.push_back("step count differs from statement count");
  for (size_t i = 0; i < tpl.templatized_answer.size() &&
                     i < tpl.program.statements.size();
       ++i) {
    const std::string token = "{" + tpl.program.statements[i].output + "}";
    if (tpl.templatized_answer[i].find(token) == std::string::npos)
      problems.push_back("step " + std::to_string(i + 1) +
                         " does not mention its output variable");
  }
  for (const std::string& q : tpl.question_vars)
    if (!tpl.factual_assignment.count(q))
      problems.push_back("question variable " + q + " has no factual value");
  report.structure_ok = problems.empty();
  report.notes = std::move(problems);

  std::set<std::string> program_vars = inputs;
  for (const ProgramStatement& st : tpl.program.statements)
    program_vars.insert(st.output);
  report.vars_in_program = true;
  for (const auto& [name, value] : tpl.factual_assignment) {
    (void)value;
    if (!program_vars.count(name)) {
      report.vars_in_program = false;
      report.notes.push_back("factual variable " + name +
                             " does not appear in the program");
    }
  }

  std::map<std::string, Rational> question_values;
  for (const std::string& q : tpl.question_vars) {
    auto it = tpl.factual_assignment.find(q);
    if (it != tpl.factual_assignment.end()) question_values.emplace(*it);
  }
  std::map<std::string, Rational> executed;
  bool ran = false;
  try {
    executed = tpl.program.execute(question_values);
    ran = true;
  } catch (const std::exception& e) {
    report.notes.push_back(std::string("program run failed: ") + e.what());
  }

  report.derived_consistent = ran;
  if (ran) {
    for (const auto& [name, value] : tpl.factual_assignment) {
      if (qvars.count(name)) continue;
      auto it = executed.find(name);
      if (it == executed.end() || !(it->second == value)) {
        report.derived_consistent = false;
        report.notes.push_back("derived variable " + name +
                               " disagrees with the program");
      }
    }
  }

  report.substitution_complete = false;
  try {
    InstantiatedProblem inst = instantiate(tpl, question_values);
    report.substitution_complete = true;
    (void)inst;
  } catch (const std::exception& e) {
    report.notes.push_back(std::string("substitution failed: ") + e.what());
  }

  report.answer_matches = false;
  if (ran && !tpl.program.statements.empty()) {
    auto recorded = Rational::parse(tpl.recorded_answer);
    if (!recorded) {
      report.notes.push_back("recorded answer is not numeric");
    } else {
      auto it = executed.find(tpl.program.final_output());
      report.answer_matches = it != executed.end() && it->second == *recorded;
      if (!report.answer_matches)
        report.notes.push_back("final output disagrees with recorded answer");
    }
  }
  return report;
}

MutAssignment sample_mutation(const ProblemTemplate& tpl,
                              const SamplerConfig& cfg, int mutation_index) {
  Rng rng(derive_seed(cfg.seed, {fnv1a(tpl.problem_id),
                                 static_cast<uint64_t>(mutation_index)}));
  const int attempts = std::max(1, cfg.max_iter);
  MutAssignment candidate;
  for (int attempt = 0; attempt < attempts; ++attempt) {
    candidate.clear();
    for (const std::string& var : tpl.question_vars) {
      const Rational& fact = tpl.factual_assignment.at(var);
      if (fact.is_integer()) {
        long long lo = static_cast<long long>(std::ceil(cfg.min_value));
        long long hi = static_cast<long long>(std::floor(cfg.max_value));
        if (lo > hi) lo = hi;
        candidate.emplace(var, Rational(rng.uniform_int(lo, hi)));
        continue;
      }
      const Rational remainder = Rational(1) - fact;
      const bool in_unit_interval =
          !fact.is_negative() && !remainder.is_negative() &&
          !remainder.is_zero();  // non-integer fact, so fact != 0 and != 1
      if (in_unit_interval) {
        candidate.emplace(var, Rational::make(rng.uniform_int(1, 999999), 1000000));
      } else {
        double r = rng.uniform_real(cfg.min_value, cfg.max_value);
        candidate.emplace(
            var, Rational::make(static_cast<long long>(std::llround(r * 1e6)),
                                1000000));
      }
    }
    try {
      std::map<std::string, Rational> values = tpl.program.execute(candidate);
      bool all_nonnegative = true;
      for (const auto& [name, value] : values) {
        (void)name;
        if (value.is_negative()) {
          all_nonnegative = false;
          break;
        }
      }
      if (all_nonnegative) return candidate;
    } catch (const std::exception&) {
      // invalid draw (division by zero / overflow): resample
    }
  }
  return candidate;
}

InstantiatedProblem instantiate(const ProblemTemplate& tpl,
                                const MutAssignment& assignment) {
  InstantiatedProblem out;
  out.values = tpl.program.execute(assignment);
  out.question = substitute(tpl.templatized_question, out.values);
  for (const std::string& step : tpl.templatized_answer)
    out.cot_steps.push_back(substitute(step, out.values));
  out.final_answer = out.values.at(tpl.program.final_output());

  auto check = [](const std::string& text) {
    for (const std::string& leftover : find_placeholders(text))
      throw std::runtime_error("missing placeholder: " + leftover);
  };
  check(out.question);
  for (const std::string& step : out.cot_steps) check(step);
  return out;
}

std::vector<std::string> styled_steps(const ProblemTemplate& tpl,
                                      const InstantiatedProblem& inst,
                                      Style style, const RuleSet& rules) {
  if (style == Style::Original) return inst.cot_steps;
  std::vector<std::string> out;
  auto resolve = [&](const Operand& o) -> Rational {
    if (o.literal) return *o.literal;
    return inst.values.at(o.placeholder);
  };
  for (const ProgramStatement& st : tpl.program.statements) {
    const OperatorSpec& op = rules.at(st.op);
    std::string sentence = render_step_sentence(
        rules, op, style, {resolve(st.lhs).str(), resolve(st.rhs).str()},
        inst.values.at(st.output).str());
    auto desc = tpl.node_explanation.find(st.output);
    if (desc != tpl.node_explanation.end() && !desc->second.empty()) {
      if (!sentence.empty() && sentence.back() == '.') sentence.pop_back();
      sentence += ", which represents " + desc->second + ".";
    }
    out.push_back(std::move(sentence));
  }
  return out;
}

std::string build_prefix(const std::vector<std::string>& steps, int k) {
  if (k < 0 || k > static_cast<int>(steps.size()))
    throw std::out_of_range("prefix length out of range");
  std::string out;
  for (int i = 0; i < k; ++i) {
    if (i > 0) out += "\n";
    out += steps[static_cast<size_t>(i)];
  }
  return out;
}

std::vector<EvalInstance> build_benchmark_instances(
    const ProblemTemplate& tpl, const InstantiatedProblem& inst,
    int mutation_index, Style style, const RuleSet& rules, int max_prefixes) {
  const std::vector<std::string> steps = styled_steps(tpl, inst, style, rules);
  const int n = static_cast<int>(steps.size());
  const std::string target = tpl.program.final_output();

  std::map<std::string, std::string> ground_truth;
  for (const auto& [name, value] : inst.values)
    ground_truth[name] = value.str();

  std::vector<EvalInstance> out;
  const int k_max = std::min(max_prefixes, n - 1);
  for (int k = 0; k <= k_max; ++k) {
    EvalInstance e;
    e.instance_id = tpl.problem_id + ":m" + std::to_string(mutation_index) +
                    ":" + style_name(style) + ":k" + std::to_string(k);
    e.source = "benchmark";
    e.problem_id = tpl.problem_id;
    e.mutation_index = mutation_index;
    e.style = style;
    e.question_text = inst.question;
    e.target = target;
    e.prefix_k = k;
    e.hop_total = n - k;
    e.prefix_text = build_prefix(steps, k);
    for (int j = k; j < n; ++j) {
      const std::string& name = tpl.program.statements[static_cast<size_t>(j)].output;
      CotStep step;
      step.name = name;
      step.prelude = "\nThe value of " + name + " = ";
      step.value = inst.values.at(name).str();
      step.text = step.prelude + step.value;
      e.per_variable_hops[name] = j - k + 1;
      e.continuation_steps.push_back(std::move(step));
    }
    e.ground_truth = ground_truth;
    e.final_answer = inst.values.at(target).str();
    e.validate();
    out.push_back(std::move(e));
  }
  return out;
}

std::vector<std::string> support_intersection(
    const std::vector<std::vector<ProblemTemplate>>& corpora) {
  if (corpora.empty()) return {};
  std::vector<std::string> out;
  for (const ProblemTemplate& t : corpora.front()) {
    bool everywhere = true;
    for (size_t i = 1; i < corpora.size() && everywhere; ++i) {
      everywhere = std::any_of(
          corpora[i].begin(), corpora[i].end(),
          [&](const ProblemTemplate& o) { return o.problem_id == t.problem_id; });
    }
    if (everywhere) out.push_back(t.problem_id);
  }
  return out;
}

}  // namespace dedcons
