#pragma once

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dedcons/instance.hpp"
#include "dedcons/runner.hpp"

namespace dedcons {

/// One scored variable prediction: the atomic unit every metric aggregates.
struct EvalRecord {
  std::string problem_id;
  std::string mutation_id;  // "" for synthetic-graph instances
  std::string instance_id;
  int prefix_k = 0;
  std::string variable;
  int hop = 1;  // 1-based post-prefix step offset
  std::optional<double> predicted;
  double reference = 0.0;
  bool correct = false;
  bool is_target = false;
  bool conflict = false;  // response restated the variable with another value

  nlohmann::json to_json() const;
  static EvalRecord from_json(const nlohmann::json& j);
};

void write_records(const std::string& path,
                   const std::vector<EvalRecord>& records);
std::vector<EvalRecord> read_records(const std::string& path);

/// Per-instance summary kept alongside the variable records: final-answer
/// correctness (for accuracy grouping) and coverage tallies.
struct InstanceScore {
  std::string instance_id;
  std::string problem_id;
  std::string mutation_id;
  int prefix_k = 0;
  std::optional<double> final_predicted;
  double final_reference = 0.0;
  bool final_correct = false;
  int covered = 0;          // reference variables with a non-None extraction
  int reference_count = 0;  // reference variables scored for this instance
  int stated_count = 0;     // distinct "value of X" names found in the text

  nlohmann::json to_json() const;
  static InstanceScore from_json(const nlohmann::json& j);
};

void write_instance_scores(const std::string& path,
                           const std::vector<InstanceScore>& scores);
std::vector<InstanceScore> read_instance_scores(const std::string& path);

struct ScoreOptions {
  std::string run_id;
  double rel_tol = 0.05;
};

struct ScoreOutcome {
  std::vector<EvalRecord> records;
  std::vector<InstanceScore> instance_scores;
  int scored_instances = 0;
  int unscored_instances = 0;  // missing response or non-ok status
};

/// Scores every instance against the latest stored response of the run
/// using the pattern extractor. Instances without a usable response are
/// counted unscored and contribute no records.
ScoreOutcome score_responses(const std::vector<EvalInstance>& instances,
                             const ResponseStore& store,
                             const ScoreOptions& opts);

struct EmptyProofError : std::runtime_error {
  EmptyProofError() : std::runtime_error("proof has no verifiable steps") {}
};

struct NoSamplesError : std::runtime_error {
  NoSamplesError(int k, int l)
      : std::runtime_error("no records at prefix " + std::to_string(k) +
                           ", hop " + std::to_string(l)) {}
};

struct DegenerateSeriesError : std::runtime_error {
  DegenerateSeriesError()
      : std::runtime_error("series needs at least 2 points") {}
};

/// Fraction of correct verifiable steps among all verifiable steps of one
/// proof. Throws EmptyProofError on an empty record set.
double per_proof_consistency(const std::vector<EvalRecord>& proof_records);

struct DCCell {
  double fraction = 0.0;
  long count = 0;
};

/// Fraction correct among records at (prefix_k = k, hop = l); throws
/// NoSamplesError when the cell is empty.
DCCell deductive_consistency(const std::vector<EvalRecord>& records, int k,
                             int l);

struct DCPoint {
  int hop = 0;  // hop index (k-marginalized series) or prefix index
  double mean_dc = 0.0;
  double std_err = 0.0;
  long n = 0;
};

struct DCSeries {
  std::vector<DCPoint> points;  // strictly increasing hop
  bool k_marginalized = true;
  std::vector<int> filtered_out;  // indices dropped by the ratio filter

  nlohmann::json to_json() const;
};

/// Equal-weight mean over populated prefixes per hop; SE is the sample
/// standard error across the per-prefix means. Hop l is retained only when
/// count(prefix 1, hop l) / count(prefix 1, hop 1) > min_ratio (no
/// filtering when the denominator is empty).
DCSeries dc_by_hop(const std::vector<EvalRecord>& records,
                   double min_ratio = 0.2);

/// Symmetric view: equal-weight mean over populated hops per prefix, with
/// prefix k retained when count(hop 1, prefix k) / count(hop 1, prefix 1)
/// exceeds min_ratio.
DCSeries dc_by_prefix(const std::vector<EvalRecord>& records,
                      double min_ratio = 0.2);

/// Fraction of reference variables with a non-None extraction. With
/// stated_denominator the denominator is instead the count of distinct
/// variables the responses state (the alternative reading surfaced in the
/// report).
double coverage(const std::vector<InstanceScore>& scores,
                bool stated_denominator = false);

struct BaseDecay {
  double base = 0.0;
  double decay = 0.0;
};

/// base = mean DC at the minimum hop; decay = negative OLS slope of mean DC
/// against x = hop / max_hop. Throws DegenerateSeriesError on < 2 points.
BaseDecay base_and_decay(const DCSeries& series);

/// Accuracy group (1..5): 1 at acc = 1; 2 on [0.7, 1); 3 on [0.4, 0.7);
/// 4 on (0, 0.4); 5 at acc = 0. Throws std::out_of_range outside [0,1].
int group_by_accuracy(double accuracy);

/// Per-problem final-answer accuracy over mutations. Uses the prefix-0
/// instances when the problem has any (the unprefixed runs), otherwise all.
std::map<std::string, double> per_problem_accuracy(
    const std::vector<InstanceScore>& scores);

std::map<int, int> group_counts(
    const std::map<std::string, double>& accuracies);

/// Error-category verdict from the optional LM judge pass.
struct JudgeFlags {
  bool judged = false;  // false when the reply was empty or unparseable
  bool logical = false;
  bool understanding = false;
  bool calculation = false;
  bool propagated_only = false;
};

/// Parses a judge reply (<JSON>{...}</JSON> with boolean fields).
JudgeFlags parse_judge_reply(const std::string& reply);

/// Sends one judging request for a wrong response; endpoint failures and
/// empty responses leave the record unjudged.
JudgeFlags judge_errors(const std::string& question,
                        const std::string& reference_answer,
                        const std::string& response,
                        CompletionClient& client);

/// Per-group category frequencies, normalized by the number of judged error
/// responses in each group.
nlohmann::json aggregate_judge(
    const std::map<int, std::vector<JudgeFlags>>& by_group);

struct ReportOptions {
  double min_ratio = 0.2;
  bool stated_denominator = false;
};

struct MetricReport {
  DCSeries by_hop;
  DCSeries by_prefix;
  double coverage = 0.0;
  double coverage_stated = 0.0;  // alternative-denominator reading
  double base = 0.0;
  double decay = 0.0;
  std::map<int, int> groups;
  nlohmann::json metadata;

  nlohmann::json to_json() const;
};

MetricReport build_report(const std::vector<EvalRecord>& records,
                          const std::vector<InstanceScore>& scores,
                          const ReportOptions& opts);

}  // namespace dedcons
