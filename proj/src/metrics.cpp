#include "dedcons/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "dedcons/extract.hpp"
#include "dedcons/prompts.hpp"
#include "dedcons/util.hpp"

namespace dedcons {

using nlohmann::json;

json EvalRecord::to_json() const {
  json j{{"problem_id", problem_id},
         {"mutation_id", mutation_id},
         {"instance_id", instance_id},
         {"prefix_k", prefix_k},
         {"variable", variable},
         {"hop", hop},
         {"reference", reference},
         {"correct", correct},
         {"is_target", is_target},
         {"conflict", conflict}};
  if (predicted)
    j["predicted"] = *predicted;
  else
    j["predicted"] = nullptr;
  return j;
}

EvalRecord EvalRecord::from_json(const json& j) {
  EvalRecord r;
  r.problem_id = j.at("problem_id").get<std::string>();
  r.mutation_id = j.value("mutation_id", std::string());
  r.instance_id = j.value("instance_id", std::string());
  r.prefix_k = j.at("prefix_k").get<int>();
  r.variable = j.at("variable").get<std::string>();
  r.hop = j.at("hop").get<int>();
  if (j.contains("predicted") && !j["predicted"].is_null())
    r.predicted = j["predicted"].get<double>();
  r.reference = j.at("reference").get<double>();
  r.correct = j.at("correct").get<bool>();
  r.is_target = j.value("is_target", false);
  r.conflict = j.value("conflict", false);
  return r;
}

void write_records(const std::string& path,
                   const std::vector<EvalRecord>& records) {
  std::vector<json> lines;
  lines.reserve(records.size());
  for (const auto& r : records) lines.push_back(r.to_json());
  write_jsonl(path, lines);
}

std::vector<EvalRecord> read_records(const std::string& path) {
  std::vector<EvalRecord> out;
  for (const auto& j : read_jsonl(path)) out.push_back(EvalRecord::from_json(j));
  return out;
}

json InstanceScore::to_json() const {
  json j{{"instance_id", instance_id},
         {"problem_id", problem_id},
         {"mutation_id", mutation_id},
         {"prefix_k", prefix_k},
         {"final_reference", final_reference},
         {"final_correct", final_correct},
         {"covered", covered},
         {"reference_count", reference_count},
         {"stated_count", stated_count}};
  if (final_predicted)
    j["final_predicted"] = *final_predicted;
  else
    j["final_predicted"] = nullptr;
  return j;
}

InstanceScore InstanceScore::from_json(const json& j) {
  InstanceScore s;
  s.instance_id = j.at("instance_id").get<std::string>();
  s.problem_id = j.at("problem_id").get<std::string>();
  s.mutation_id = j.value("mutation_id", std::string());
  s.prefix_k = j.at("prefix_k").get<int>();
  if (j.contains("final_predicted") && !j["final_predicted"].is_null())
    s.final_predicted = j["final_predicted"].get<double>();
  s.final_reference = j.at("final_reference").get<double>();
  s.final_correct = j.at("final_correct").get<bool>();
  s.covered = j.at("covered").get<int>();
  s.reference_count = j.at("reference_count").get<int>();
  s.stated_count = j.value("stated_count", 0);
  return s;
}

void write_instance_scores(const std::string& path,
                           const std::vector<InstanceScore>& scores) {
  std::vector<json> lines;
  lines.reserve(scores.size());
  for (const auto& s : scores) lines.push_back(s.to_json());
  write_jsonl(path, lines);
}

std::vector<InstanceScore> read_instance_scores(const std::string& path) {
  std::vector<InstanceScore> out;
  for (const auto& j : read_jsonl(path))
    out.push_back(InstanceScore::from_json(j));
  return out;
}

namespace {

bool identifier_char(char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
         (c >= '0' && c <= '9') || c == '_';
}

/// Distinct names appearing as "value of {name}" anywhere in the text.
int count_stated_variables(const std::string& text) {
  static const std::string kNeedle = "value of ";
  std::set<std::string> names;
  std::size_t pos = 0;
  while ((pos = text.find(kNeedle, pos)) != std::string::npos) {
    std::size_t i = pos + kNeedle.size();
    while (i < text.size() && text[i] == ' ') ++i;
    std::size_t start = i;
    while (i < text.size() && identifier_char(text[i])) ++i;
    if (i > start) names.insert(text.substr(start, i - start));
    pos += kNeedle.size();
  }
  return static_cast<int>(names.size());
}

double require_reference(const std::string& rendered,
                         const std::string& what) {
  auto v = normalize_numeric(rendered);
  if (!v)
    throw std::runtime_error("unparseable reference value for " + what +
                             ": " + rendered);
  return *v;
}

}  // namespace

ScoreOutcome score_responses(const std::vector<EvalInstance>& instances,
                             const ResponseStore& store,
                             const ScoreOptions& opts) {
  ScoreOutcome out;
  const auto latest = latest_responses(store, opts.run_id);
  for (const auto& inst : instances) {
    auto it = latest.find(inst.instance_id);
    if (it == latest.end() || it->second->status != ResponseStatus::Ok) {
      ++out.unscored_instances;
      continue;
    }
    const std::string& text = it->second->text;
    std::vector<std::string> variables;
    variables.reserve(inst.per_variable_hops.size());
    for (const auto& [name, hop] : inst.per_variable_hops)
      variables.push_back(name);
    const ExtractedAssignment assignment =
        extract_variables_pattern(text, variables);

    const std::string mutation_id =
        inst.mutation_index >= 0 ? "m" + std::to_string(inst.mutation_index)
                                 : std::string();
    InstanceScore score;
    score.instance_id = inst.instance_id;
    score.problem_id = inst.problem_id;
    score.mutation_id = mutation_id;
    score.prefix_k = inst.prefix_k;
    score.reference_count = static_cast<int>(variables.size());
    score.stated_count = count_stated_variables(text);

    for (const auto& [name, hop] : inst.per_variable_hops) {
      EvalRecord rec;
      rec.problem_id = inst.problem_id;
      rec.mutation_id = mutation_id;
      rec.instance_id = inst.instance_id;
      rec.prefix_k = inst.prefix_k;
      rec.variable = name;
      rec.hop = hop;
      rec.reference = require_reference(inst.ground_truth.at(name), name);
      auto extraction = assignment.values.find(name);
      if (extraction != assignment.values.end()) {
        rec.predicted = extraction->second.value;
        rec.conflict = extraction->second.conflict;
      }
      rec.correct = values_match(rec.predicted, rec.reference, opts.rel_tol);
      rec.is_target = name == inst.target;
      if (rec.predicted) ++score.covered;
      out.records.push_back(std::move(rec));
    }

    score.final_predicted = extract_final_answer(text);
    score.final_reference =
        require_reference(inst.final_answer, "final answer");
    score.final_correct =
        values_match(score.final_predicted, score.final_reference,
                     opts.rel_tol);
    out.instance_scores.push_back(std::move(score));
    ++out.scored_instances;
  }
  return out;
}

double per_proof_consistency(const std::vector<EvalRecord>& proof_records) {
  if (proof_records.empty()) throw EmptyProofError();
  long correct = 0;
  for (const auto& r : proof_records)
    if (r.correct) ++correct;
  return static_cast<double>(correct) /
         static_cast<double>(proof_records.size());
}

DCCell deductive_consistency(const std::vector<EvalRecord>& records, int k,
                             int l) {
  long correct = 0;
  long total = 0;
  for (const auto& r : records) {
    if (r.prefix_k != k || r.hop != l) continue;
    ++total;
    if (r.correct) ++correct;
  }
  if (total == 0) throw NoSamplesError(k, l);
  return DCCell{static_cast<double>(correct) / static_cast<double>(total),
                total};
}

json DCSeries::to_json() const {
  json pts = json::array();
  for (const auto& p : points)
    pts.push_back(json{{"hop", p.hop},
                       {"mean_dc", p.mean_dc},
                       {"std_err", p.std_err},
                       {"n", p.n}});
  return json{{"k_marginalized", k_marginalized},
              {"points", pts},
              {"filtered_out", filtered_out}};
}

namespace {

struct CellTally {
  long correct = 0;
  long total = 0;
};

/// Shared machinery for both marginalized series: `primary` indexes the
/// series axis, `secondary` is averaged over with equal weight.
DCSeries marginalized_series(const std::vector<EvalRecord>& records,
                             double min_ratio, bool hop_axis) {
  std::map<std::pair<int, int>, CellTally> cells;  // (primary, secondary)
  std::map<int, long> gate_counts;  // primary -> count at secondary == 1
  for (const auto& r : records) {
    const int primary = hop_axis ? r.hop : r.prefix_k;
    const int secondary = hop_axis ? r.prefix_k : r.hop;
    auto& cell = cells[{primary, secondary}];
    ++cell.total;
    if (r.correct) ++cell.correct;
    if (secondary == 1) ++gate_counts[primary];
  }

  DCSeries series;
  series.k_marginalized = hop_axis;
  const long gate_base =
      gate_counts.count(1) ? gate_counts.at(1) : 0;  // primary == 1 cell

  std::map<int, std::vector<double>> means_by_primary;
  std::map<int, long> n_by_primary;
  for (const auto& [key, tally] : cells) {
    means_by_primary[key.first].push_back(
        static_cast<double>(tally.correct) /
        static_cast<double>(tally.total));
    n_by_primary[key.first] += tally.total;
  }

  for (const auto& [primary, means] : means_by_primary) {
    if (gate_base > 0) {
      const long own =
          gate_counts.count(primary) ? gate_counts.at(primary) : 0;
      const double ratio =
          static_cast<double>(own) / static_cast<double>(gate_base);
      if (!(ratio > min_ratio)) {
        series.filtered_out.push_back(primary);
        continue;
      }
    }
    double mean = 0.0;
    for (double m : means) mean += m;
    mean /= static_cast<double>(means.size());
    double se = 0.0;
    if (means.size() >= 2) {
      double ss = 0.0;
      for (double m : means) ss += (m - mean) * (m - mean);
      const double sd = std::sqrt(ss / static_cast<double>(means.size() - 1));
      se = sd / std::sqrt(static_cast<double>(means.size()));
    }
    series.points.push_back(
        DCPoint{primary, mean, se, n_by_primary.at(primary)});
  }
  return series;
}

}  // namespace

DCSeries dc_by_hop(const std::vector<EvalRecord>& records, double min_ratio) {
  return marginalized_series(records, min_ratio, /*hop_axis=*/true);
}

DCSeries dc_by_prefix(const std::vector<EvalRecord>& records,
                      double min_ratio) {
  return marginalized_series(records, min_ratio, /*hop_axis=*/false);
}

double coverage(const std::vector<InstanceScore>& scores,
                bool stated_denominator) {
  long covered = 0;
  long denom = 0;
  for (const auto& s : scores) {
    covered += s.covered;
    denom += stated_denominator ? s.stated_count : s.reference_count;
  }
  if (denom == 0) return 0.0;
  return static_cast<double>(covered) / static_cast<double>(denom);
}

BaseDecay base_and_decay(const DCSeries& series) {
  if (series.points.size() < 2) throw DegenerateSeriesError();
  const int max_hop = series.points.back().hop;
  double sx = 0, sy = 0;
  const double n = static_cast<double>(series.points.size());
  for (const auto& p : series.points) {
    sx += static_cast<double>(p.hop) / max_hop;
    sy += p.mean_dc;
  }
  const double mx = sx / n;
  const double my = sy / n;
  double sxy = 0, sxx = 0;
  for (const auto& p : series.points) {
    const double x = static_cast<double>(p.hop) / max_hop;
    sxy += (x - mx) * (p.mean_dc - my);
    sxx += (x - mx) * (x - mx);
  }
  BaseDecay out;
  out.base = series.points.front().mean_dc;
  out.decay = -(sxy / sxx);
  return out;
}

int group_by_accuracy(double accuracy) {
  if (!(accuracy >= 0.0 && accuracy <= 1.0))
    throw std::out_of_range("accuracy must lie in [0,1]");
  if (accuracy == 1.0) return 1;
  if (accuracy >= 0.7) return 2;
  if (accuracy >= 0.4) return 3;
  if (accuracy > 0.0) return 4;
  return 5;
}

std::map<std::string, double> per_problem_accuracy(
    const std::vector<InstanceScore>& scores) {
  std::map<std::string, std::vector<const InstanceScore*>> by_problem;
  for (const auto& s : scores) by_problem[s.problem_id].push_back(&s);

  std::map<std::string, double> accuracies;
  for (const auto& [problem, entries] : by_problem) {
    bool any_k0 = false;
    for (const auto* e : entries)
      if (e->prefix_k == 0) any_k0 = true;
    long correct = 0, total = 0;
    for (const auto* e : entries) {
      if (any_k0 && e->prefix_k != 0) continue;
      ++total;
      if (e->final_correct) ++correct;
    }
    accuracies[problem] =
        static_cast<double>(correct) / static_cast<double>(total);
  }
  return accuracies;
}

std::map<int, int> group_counts(
    const std::map<std::string, double>& accuracies) {
  std::map<int, int> counts;
  for (const auto& [problem, acc] : accuracies)
    ++counts[group_by_accuracy(acc)];
  return counts;
}

JudgeFlags parse_judge_reply(const std::string& reply) {
  JudgeFlags flags;
  const auto open = reply.find("<JSON>");
  const auto close = reply.rfind("</JSON>");
  if (open == std::string::npos || close == std::string::npos ||
      close <= open)
    return flags;
  const std::string body =
      reply.substr(open + 6, close - (open + 6));
  try {
    const json j = json::parse(body);
    if (!j.is_object()) return flags;
    flags.logical = j.value("logical", false);
    flags.understanding = j.value("understanding", false);
    flags.calculation = j.value("calculation", false);
    flags.propagated_only = j.value("propagated_only", false);
    flags.judged = true;
  } catch (const json::exception&) {
    // leave unjudged
  }
  return flags;
}

JudgeFlags judge_errors(const std::string& question,
                        const std::string& reference_answer,
                        const std::string& response,
                        CompletionClient& client) {
  if (response.empty()) return JudgeFlags{};
  PromptBundle bundle;
  bundle.system_text = judge_system_prompt();
  bundle.user_text = judge_user_prompt(question, reference_answer, response);
  bundle.instance_ref = "judge";
  const RawResponse raw = client.complete(bundle);
  if (raw.status != ResponseStatus::Ok) return JudgeFlags{};
  return parse_judge_reply(raw.text);
}

json aggregate_judge(const std::map<int, std::vector<JudgeFlags>>& by_group) {
  json out = json::object();
  for (const auto& [group, flags] : by_group) {
    long judged = 0, logical = 0, understanding = 0, calculation = 0,
         propagated = 0;
    for (const auto& f : flags) {
      if (!f.judged) continue;
      ++judged;
      if (f.logical) ++logical;
      if (f.understanding) ++understanding;
      if (f.calculation) ++calculation;
      if (f.propagated_only) ++propagated;
    }
    json entry{{"judged", judged}, {"unjudged",
                static_cast<long>(flags.size()) - judged}};
    if (judged > 0) {
      entry["logical"] = static_cast<double>(logical) / judged;
      entry["understanding"] = static_cast<double>(understanding) / judged;
      entry["calculation"] = static_cast<double>(calculation) / judged;
      entry["propagated_only"] = static_cast<double>(propagated) / judged;
    }
    out[std::to_string(group)] = entry;
  }
  return out;
}

json MetricReport::to_json() const {
  json grp = json::object();
  for (const auto& [g, n] : groups) grp[std::to_string(g)] = n;
  return json{{"dc_by_hop", by_hop.to_json()},
              {"dc_by_prefix", by_prefix.to_json()},
              {"coverage", coverage},
              {"coverage_stated", coverage_stated},
              {"base", base},
              {"decay", decay},
              {"groups", grp},
              {"metadata", metadata}};
}

MetricReport build_report(const std::vector<EvalRecord>& records,
                          const std::vector<InstanceScore>& scores,
                          const ReportOptions& opts) {
  MetricReport report;
  report.by_hop = dc_by_hop(records, opts.min_ratio);
  report.by_prefix = dc_by_prefix(records, opts.min_ratio);
  report.coverage = coverage(scores, false);
  report.coverage_stated = coverage(scores, true);
  if (report.by_hop.points.size() >= 2) {
    const BaseDecay bd = base_and_decay(report.by_hop);
    report.base = bd.base;
    report.decay = bd.decay;
  } else if (report.by_hop.points.size() == 1) {
    report.base = report.by_hop.points.front().mean_dc;
    report.decay = 0.0;
    report.metadata["degenerate_hop_series"] = true;
  }
  report.groups = group_counts(per_problem_accuracy(scores));
  report.metadata["min_ratio"] = opts.min_ratio;
  report.metadata["hop_normalization"] = "x = hop / max_hop";
  report.metadata["std_err_definition"] =
      "sample standard error across per-prefix means";
  report.metadata["coverage_note"] =
      "coverage divides by the reference variable count; coverage_stated "
      "divides by the distinct variables stated in responses";
  return report;
}

}  // namespace dedcons
