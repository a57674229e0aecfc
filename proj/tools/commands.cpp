#include "commands.hpp"

#include <cstdio>
#include <exception>
#include <iostream>
#include <map>
#include <memory>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "dedcons/generate.hpp"
#include "dedcons/instance.hpp"
#include "dedcons/metrics.hpp"
#include "dedcons/mutate.hpp"
#include "dedcons/prompts.hpp"
#include "dedcons/report.hpp"
#include "dedcons/runner.hpp"
#include "dedcons/util.hpp"

namespace dedcons::cli {
namespace {

using nlohmann::json;

RuleSet load_rules(const std::string& operators_file) {
  if (operators_file.empty()) return RuleSet::builtin();
  return RuleSet::from_json(json::parse(read_text_file(operators_file)));
}

std::vector<std::string> load_nouns(const std::string& nouns_file) {
  if (nouns_file.empty()) return {};
  const json j = json::parse(read_text_file(nouns_file));
  if (!j.is_array())
    throw std::runtime_error("noun file must hold a JSON array of strings");
  std::vector<std::string> nouns;
  for (const auto& item : j) nouns.push_back(item.get<std::string>());
  return nouns;
}

std::vector<Style> parse_styles(const std::string& csv) {
  std::vector<Style> styles;
  std::stringstream ss(csv);
  std::string token;
  while (std::getline(ss, token, ',')) {
    if (!token.empty()) styles.push_back(require_style(token));
  }
  if (styles.empty())
    throw std::invalid_argument("at least one style is required");
  return styles;
}

struct GenerateArgs {
  int num_graphs = 1;
  int m = 60;
  double unary_ratio = 0.0;
  std::string logic_mode = "bodmas";
  std::string naming_mode = "noun";
  std::string nouns_file;
  std::string operators_file;
  std::string output_file;
  int max_hops = 24;
  int max_graphs = 0;
  std::string style = "original";
  long long value_min = 1;
  long long value_max = 20;
  std::uint64_t seed = 0;
};

int cmd_generate(const GenerateArgs& args) {
  GenParams params;
  params.num_graphs = args.num_graphs;
  params.m = args.m;
  params.unary_ratio = args.unary_ratio;
  params.logic_mode = args.logic_mode;
  params.naming_mode = args.naming_mode;
  params.nouns = load_nouns(args.nouns_file);
  params.rules = load_rules(args.operators_file);
  params.max_hops = args.max_hops;
  params.max_graphs_per_hop = args.max_graphs;
  params.style = require_style(args.style);
  params.value_min = args.value_min;
  params.value_max = args.value_max;
  params.seed = args.seed;

  const GenResult result = generate_questions(params);
  write_questions(args.output_file, result.questions);
  write_manifest(args.output_file, params.to_json());

  if (args.max_graphs > 0)
    std::cout << "Steps kept and undersampled to " << args.max_graphs
              << ":\n";
  else
    std::cout << "Steps kept:\n";
  for (const auto& [hop, count] : result.hop_histogram)
    std::cout << "Hop " << hop << ": " << count << "\n";
  return 0;
}

struct TransformArgs {
  std::string input_file;
  std::string output_file;
  int max_hops = 12;
  int max_items = 120;
  int max_prefixes = 12;
  int max_prefix_length = 0;
  std::uint64_t seed = 0;
};

int cmd_transform(const TransformArgs& args) {
  const auto questions = read_questions(args.input_file);
  TransformParams params;
  params.max_hops = args.max_hops;
  params.max_items_per_hop = args.max_items;
  params.max_prefixes = args.max_prefixes;
  params.max_prefix_length = args.max_prefix_length;
  params.seed = args.seed;

  const TransformResult result = transform_questions(questions, params);
  write_instances(args.output_file, result.instances);
  write_manifest(args.output_file, params.to_json());

  for (const auto& w : result.warnings)
    std::cerr << "Warning: Hop " << w.hop << " Prefix" << w.prefix
              << ": kept " << w.available << " of quota " << w.quota << "\n";

  std::map<int, std::map<int, int>> by_hop;  // hop -> prefix -> count
  std::map<int, int> by_prefix;
  std::map<int, int> per_hop_total;
  int total = 0;
  for (const auto& [cell, count] : result.cell_counts) {
    by_hop[cell.first][cell.second] = count;
    by_prefix[cell.second] += count;
    per_hop_total[cell.first] += count;
    total += count;
  }

  std::cout << "\nPrefix Length Distribution Per Hop Category (After "
               "Undersampling):\n\n";
  for (const auto& [hop, prefixes] : by_hop) {
    std::cout << "Hop " << hop << ": ";
    bool first = true;
    for (const auto& [prefix, count] : prefixes) {
      if (!first) std::cout << ", ";
      std::cout << "Prefix" << prefix << ": " << count;
      first = false;
    }
    std::cout << "\n";
  }
  std::cout << "\nTotal Prefix Length Distribution Across Hops:\n\n";
  for (const auto& [prefix, count] : by_prefix)
    std::cout << "Prefix" << prefix << ": " << count << "\n";
  std::cout << "\nNumber Of Items per Hop\n\n";
  for (const auto& [hop, count] : per_hop_total)
    std::cout << "Hop: " << hop << " - " << count << "\n";
  std::cout << "Total entries in transformed JSON: " << total << "\n";
  return 0;
}

struct MutateArgs {
  std::string corpus_file;
  std::vector<std::string> join_files;
  std::string output_file;
  std::string operators_file;
  std::string styles = "original";
  int mutations_per_problem = 10;
  double min_value = 2;
  double max_value = 100;
  int max_iter = 20;
  int max_prefixes = 12;
  std::uint64_t seed = 0;
};

int cmd_mutate(const MutateArgs& args) {
  auto corpus = read_template_corpus(args.corpus_file);
  if (!args.join_files.empty()) {
    std::vector<std::vector<ProblemTemplate>> corpora;
    corpora.push_back(corpus);
    for (const auto& path : args.join_files)
      corpora.push_back(read_template_corpus(path));
    const auto shared = support_intersection(corpora);
    const std::set<std::string> keep(shared.begin(), shared.end());
    std::vector<ProblemTemplate> joined;
    for (auto& tpl : corpus)
      if (keep.count(tpl.problem_id)) joined.push_back(std::move(tpl));
    corpus = std::move(joined);
  }

  const RuleSet rules =
      args.operators_file.empty() ? RuleSet::arithmetic()
                                  : load_rules(args.operators_file);
  const auto styles = parse_styles(args.styles);

  SamplerConfig cfg;
  cfg.min_value = args.min_value;
  cfg.max_value = args.max_value;
  cfg.max_iter = args.max_iter;
  cfg.mutations_per_problem = args.mutations_per_problem;
  cfg.seed = args.seed;

  std::vector<EvalInstance> instances;
  int passed = 0;
  for (const auto& tpl : corpus) {
    const SanityReport report = validate_template(tpl);
    if (!report.pass()) {
      std::cerr << "Skipping " << tpl.problem_id << ":";
      for (const auto& note : report.notes) std::cerr << " " << note << ";";
      std::cerr << "\n";
      continue;
    }
    ++passed;
    for (int index = 0; index < cfg.mutations_per_problem; ++index) {
      const MutAssignment assignment = sample_mutation(tpl, cfg, index);
      const InstantiatedProblem inst = instantiate(tpl, assignment);
      for (const Style style : styles) {
        auto batch = build_benchmark_instances(tpl, inst, index, style, rules,
                                               args.max_prefixes);
        instances.insert(instances.end(),
                         std::make_move_iterator(batch.begin()),
                         std::make_move_iterator(batch.end()));
      }
    }
  }

  write_instances(args.output_file, instances);
  json params = cfg.to_json();
  params["styles"] = args.styles;
  params["max_prefixes"] = args.max_prefixes;
  write_manifest(args.output_file, params);

  std::cout << "Problems passing sanity checks: " << passed << " of "
            << corpus.size() << "\n";
  std::cout << "Mutations per problem: " << cfg.mutations_per_problem << "\n";
  std::cout << "Total instances: " << instances.size() << "\n";
  return 0;
}

struct RunArgs {
  std::string dataset_file;
  std::string store_file;
  std::string run_id;
  std::string endpoint_config;
  std::string operators_file;
  bool mock = false;
  double mock_p = 0.0;
  std::string mock_mode = "independent";
  std::uint64_t seed = 0;
  int max_concurrency = 0;  // 0 = endpoint default / 4 for mock
  bool overwrite = false;
};

int cmd_run(const RunArgs& args) {
  const auto instances = read_instances(args.dataset_file);
  PromptTemplates templates;
  templates.rules = args.operators_file.empty()
                        ? RuleSet::builtin()
                        : load_rules(args.operators_file);

  json run_cfg;
  run_cfg["dataset_sha256"] = sha256_file_hex(args.dataset_file);
  std::unique_ptr<CompletionClient> client;
  int concurrency = args.max_concurrency;
  if (args.mock) {
    MockReasonerConfig mock_cfg;
    mock_cfg.per_step_error_rate = args.mock_p;
    mock_cfg.error_mode = MockReasonerConfig::parse_error_mode(args.mock_mode);
    mock_cfg.seed = args.seed;
    run_cfg["mock"] = json{{"p", args.mock_p},
                           {"error_mode", args.mock_mode},
                           {"seed", args.seed}};
    client = std::make_unique<MockCompletionClient>(instances, mock_cfg);
    if (concurrency == 0) concurrency = 4;
  } else {
    if (args.endpoint_config.empty())
      throw std::invalid_argument(
          "either --mock or --endpoint_config is required");
    const EndpointConfig endpoint =
        EndpointConfig::from_json(json::parse(
            read_text_file(args.endpoint_config)));
    run_cfg["endpoint"] = endpoint.to_json();
    client = std::make_unique<HttpCompletionClient>(endpoint);
    if (concurrency == 0) concurrency = endpoint.max_concurrency;
  }

  RunOptions opts;
  opts.run_id = args.run_id.empty() ? "run-" + config_hash(run_cfg)
                                    : args.run_id;
  opts.max_concurrency = concurrency;
  opts.overwrite = args.overwrite;

  ResponseStore store(args.store_file);
  const RunStats stats =
      run_instances(instances, templates, *client, store, opts);
  run_cfg["run_id"] = opts.run_id;
  write_manifest(args.store_file, run_cfg);

  std::cout << "run_id: " << opts.run_id << "\n";
  std::cout << "total: " << stats.total << " completed: " << stats.completed
            << " failed: " << stats.failed << " skipped: " << stats.skipped
            << "\n";
  return stats.failed > 0 ? 2 : 0;
}

struct ScoreArgs {
  std::string dataset_file;
  std::string store_file;
  std::string run_id;
  std::string records_file;
  std::string scores_file;
  double rel_tol = 0.05;
};

int cmd_score(const ScoreArgs& args) {
  const auto instances = read_instances(args.dataset_file);
  ResponseStore store(args.store_file);

  std::string run_id = args.run_id;
  if (run_id.empty()) {
    std::set<std::string> run_ids;
    for (const auto& r : store.records()) run_ids.insert(r.run_id);
    if (run_ids.size() != 1)
      throw std::invalid_argument(
          "--run_id is required when the store holds " +
          std::to_string(run_ids.size()) + " runs");
    run_id = *run_ids.begin();
  }

  ScoreOptions opts;
  opts.run_id = run_id;
  opts.rel_tol = args.rel_tol;
  const ScoreOutcome outcome = score_responses(instances, store, opts);

  write_records(args.records_file, outcome.records);
  write_instance_scores(args.scores_file, outcome.instance_scores);
  json params{{"run_id", run_id},
              {"rel_tol", args.rel_tol},
              {"dataset_sha256", sha256_file_hex(args.dataset_file)}};
  write_manifest(args.records_file, params);
  write_manifest(args.scores_file, params);

  std::cout << "scored: " << outcome.scored_instances
            << " unscored: " << outcome.unscored_instances
            << " records: " << outcome.records.size() << "\n";
  return outcome.unscored_instances > 0 ? 2 : 0;
}

struct ReportArgs {
  std::string records_file;
  std::string scores_file;
  std::string output_dir;
  std::string label = "run";
  double min_ratio = 0.2;
  bool stated_denominator = false;
};

int cmd_report(const ReportArgs& args) {
  const auto records = read_records(args.records_file);
  const auto scores = read_instance_scores(args.scores_file);
  ReportOptions opts;
  opts.min_ratio = args.min_ratio;
  opts.stated_denominator = args.stated_denominator;
  const MetricReport report = build_report(records, scores, opts);
  write_report_files(args.output_dir, report, records, args.label);

  std::cout << "base: " << format_metric(report.base)
            << " decay: " << format_metric(report.decay) << " coverage: "
            << format_metric(args.stated_denominator
                                 ? report.coverage_stated
                                 : report.coverage)
            << "\n";
  for (const auto& [group, count] : report.groups)
    std::cout << "Group-" << group << ": " << count << "\n";
  return 0;
}

struct ValidateArgs {
  std::string corpus_file;
  std::string dataset_file;
  std::string operators_file;
};

int cmd_validate(const ValidateArgs& args) {
  bool ok = true;
  bool checked = false;
  if (!args.operators_file.empty()) {
    checked = true;
    try {
      load_rules(args.operators_file).validate();
      std::cout << "rule set: ok\n";
    } catch (const std::exception& e) {
      ok = false;
      std::cout << "rule set: FAIL (" << e.what() << ")\n";
    }
  }
  if (!args.corpus_file.empty()) {
    checked = true;
    for (const auto& tpl : read_template_corpus(args.corpus_file)) {
      const SanityReport report = validate_template(tpl);
      std::cout << tpl.problem_id << ": "
                << (report.pass() ? "ok" : "FAIL");
      for (const auto& note : report.notes) std::cout << " [" << note << "]";
      std::cout << "\n";
      if (!report.pass()) ok = false;
    }
  }
  if (!args.dataset_file.empty()) {
    checked = true;
    int checked_count = 0;
    try {
      for (const auto& inst : read_instances(args.dataset_file)) {
        inst.validate();
        ++checked_count;
      }
      std::cout << "instances: " << checked_count << " ok\n";
    } catch (const std::exception& e) {
      ok = false;
      std::cout << "instances: FAIL after " << checked_count << " ("
                << e.what() << ")\n";
    }
  }
  if (!checked)
    throw std::invalid_argument(
        "nothing to validate: pass --corpus, --dataset, or "
        "--operators_file");
  return ok ? 0 : 1;
}

}  // namespace

int run_cli(int argc, char** argv) {
  CLI::App app{"Deductive-consistency evaluation pipeline"};
  app.require_subcommand(1);

  GenerateArgs gen;
  auto* generate = app.add_subcommand(
      "generate", "Sample computation graphs and render questions");
  generate->add_option("--num_graphs", gen.num_graphs);
  generate->add_option("--m", gen.m, "Nodes per graph");
  generate->add_option("--unary_ratio", gen.unary_ratio);
  generate->add_option("--logic_mode", gen.logic_mode);
  generate->add_option("--naming_mode", gen.naming_mode,
                       "noun or symbolic node names");
  generate->add_option("--nouns_file", gen.nouns_file);
  generate->add_option("--operators_file", gen.operators_file);
  generate->add_option("--output_file", gen.output_file)->required();
  generate->add_option("--max_hops", gen.max_hops);
  generate->add_option("--max_graphs", gen.max_graphs,
                       "Per-hop question cap; 0 keeps everything");
  generate->add_option("--style", gen.style);
  generate->add_option("--value_min", gen.value_min);
  generate->add_option("--value_max", gen.value_max);
  generate->add_option("--seed", gen.seed);

  TransformArgs tr;
  auto* transform = app.add_subcommand(
      "transform", "Expand questions into prefixed, binned instances");
  transform->add_option("--input_file", tr.input_file)->required();
  transform->add_option("--output_file", tr.output_file)->required();
  transform->add_option("--max_hops", tr.max_hops);
  transform->add_option("--max_items", tr.max_items,
                        "Items per hop across its prefixes");
  transform->add_option("--max_prefixes", tr.max_prefixes);
  transform->add_option("--max_prefix_length", tr.max_prefix_length,
                        "Extra cap on prefix length; 0 = unbounded");
  transform->add_option("--seed", tr.seed);

  MutateArgs mut;
  auto* mutate = app.add_subcommand(
      "mutate", "Resample template values into mutated benchmark instances");
  mutate->add_option("--corpus", mut.corpus_file)->required();
  mutate->add_option("--join", mut.join_files,
                     "Other corpora; keep only shared problem ids");
  mutate->add_option("--output_file", mut.output_file)->required();
  mutate->add_option("--operators_file", mut.operators_file);
  mutate->add_option("--styles", mut.styles,
                     "Comma-separated verbalization styles");
  mutate->add_option("--mutations_per_problem", mut.mutations_per_problem);
  mutate->add_option("--min_value", mut.min_value);
  mutate->add_option("--max_value", mut.max_value);
  mutate->add_option("--max_iter", mut.max_iter);
  mutate->add_option("--max_prefixes", mut.max_prefixes);
  mutate->add_option("--seed", mut.seed);

  RunArgs run;
  auto* run_cmd = app.add_subcommand(
      "run", "Send dataset prompts to an endpoint or the mock reasoner");
  run_cmd->add_option("--dataset", run.dataset_file)->required();
  run_cmd->add_option("--store", run.store_file)->required();
  run_cmd->add_option("--run_id", run.run_id,
                      "Defaults to a config-derived id");
  run_cmd->add_option("--endpoint_config", run.endpoint_config,
                      "JSON endpoint description");
  run_cmd->add_option("--operators_file", run.operators_file);
  run_cmd->add_flag("--mock", run.mock, "Use the built-in mock reasoner");
  run_cmd->add_option("--mock_p", run.mock_p, "Mock per-step error rate");
  run_cmd->add_option("--mock_mode", run.mock_mode,
                      "perturb-value | propagate | independent");
  run_cmd->add_option("--seed", run.seed);
  run_cmd->add_option("--max_concurrency", run.max_concurrency);
  run_cmd->add_flag("--overwrite", run.overwrite,
                    "Re-answer instances already in the store");

  ScoreArgs score;
  auto* score_cmd = app.add_subcommand(
      "score", "Extract and grade variables from stored responses");
  score_cmd->add_option("--dataset", score.dataset_file)->required();
  score_cmd->add_option("--store", score.store_file)->required();
  score_cmd->add_option("--run_id", score.run_id,
                        "Required when the store holds several runs");
  score_cmd->add_option("--records_out", score.records_file)->required();
  score_cmd->add_option("--scores_out", score.scores_file)->required();
  score_cmd->add_option("--rel_tol", score.rel_tol);

  ReportArgs rep;
  auto* report_cmd = app.add_subcommand(
      "report", "Aggregate scored records into metric tables");
  report_cmd->add_option("--records", rep.records_file)->required();
  report_cmd->add_option("--scores", rep.scores_file)->required();
  report_cmd->add_option("--output_dir", rep.output_dir)->required();
  report_cmd->add_option("--label", rep.label);
  report_cmd->add_option("--min_ratio", rep.min_ratio,
                         "Hop retention ratio threshold");
  report_cmd->add_flag("--stated_denominator", rep.stated_denominator,
                       "Coverage over stated variables instead of the "
                       "reference set");

  ValidateArgs val;
  auto* validate_cmd = app.add_subcommand(
      "validate", "Check corpora, datasets, or rule sets");
  validate_cmd->add_option("--corpus", val.corpus_file);
  validate_cmd->add_option("--dataset", val.dataset_file);
  validate_cmd->add_option("--operators_file", val.operators_file);

  CLI11_PARSE(app, argc, argv);

  try {
    if (generate->parsed()) return cmd_generate(gen);
    if (transform->parsed()) return cmd_transform(tr);
    if (mutate->parsed()) return cmd_mutate(mut);
    if (run_cmd->parsed()) return cmd_run(run);
    if (score_cmd->parsed()) return cmd_score(score);
    if (report_cmd->parsed()) return cmd_report(rep);
    if (validate_cmd->parsed()) return cmd_validate(val);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}

}  // namespace dedcons::cli
