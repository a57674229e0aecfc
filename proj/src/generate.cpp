#include "dedcons/generate.hpp"

#include <algorithm>
#include <stdexcept>

#include "dedcons/rng.hpp"
#include "dedcons/util.hpp"

namespace dedcons {

namespace {

constexpr const char* kNouns[] = {
    "Abernathy", "Acosta",    "Aldrin",    "Almeria",   "Altona",
    "Amadeo",    "Anstey",    "Aragon",    "Arbuckle",  "Ardmore",
    "Arvelo",    "Ashby",     "Atwater",   "Auberon",   "Avalon",
    "Axford",    "Babcock",   "Balfour",   "Bancroft",  "Barlow",
    "Bayliss",   "Beckett",   "Bellamy",   "Benally",   "Berkner",
    "Bexley",    "Biscay",    "Blakely",   "Bogdan",    "Bonavita",
    "Borland",   "Bosworth",  "Boutwell",  "Bowen",     "Brackett",
    "Bramwell",  "Brenner",   "Bristow",   "Brockman",  "Burgoyne",
    "Cabrera",   "Cadogan",   "Calloway",  "Camborne",  "Candela",
    "Carraway",  "Carvalho",  "Castellan", "Catalor",   "Cervantes",
    "Certain",   "Chadwick",  "Chamorro",  "Chandler",  "Charlevoix",
    "Chisolm",   "Cimarron",  "Clairmont", "Clemens",   "Colville",
    "Conover",   "Coppola",   "Corbett",   "Cormier",   "Cranston",
    "Crowther",  "Culbert",   "Dagenham",  "Dalmore",   "Danforth",
    "Darnell",   "Delacroix", "Delgado",   "Demarest",  "Deverell",
    "Dinsmore",  "Donovan",   "Dorchester", "Drummond", "Dunmore",
    "Eastman",   "Edgerton",  "Eldridge",  "Ellery",    "Elsinore",
    "Emerson",   "Enfield",   "Escalante", "Esperanza", "Everly",
    "Fairbank",  "Falkner",   "Farnsworth", "Fenwick",  "Ferrara",
    "Finnegan",  "Fitzroy",   "Flanders",  "Fontaine",  "Forsythe",
    "Frampton",  "Fresnel",   "Gallagher", "Galloway",  "Garnett",
    "Gassman",   "Gatlin",    "Gaviota",   "Gillespie", "Giordano",
    "Glenmore",  "Goddard",   "Granville", "Greeley",   "Grimaldi",
    "Guerrero",  "Hadleigh",  "Halloran",  "Hammond",   "Harcourt",
    "Hargrove",  "Hartwell",  "Hastings",  "Hatfield",  "Haverford",
    "Hawkins",   "Hazelton",  "Hendricks", "Hermosa",   "Hollister",
    "Holloway",  "Horstman",  "Huxley",    "Ibarra",    "Ingersoll",
    "Irtysh",    "Isidore",   "Jarrell",   "Jemison",   "Jervis",
    "Kalispell", "Karelia",   "Keating",   "Kellerman", "Kendrick",
    "Kenyon",    "Kessler",   "Kingsley",  "Kirkwood",  "Klamath",
    "Lachlan",   "Lafferty",  "Lambert",   "Langford",  "Larimer",
    "Latimer",   "Leighton",  "Lennox",    "Lindqvist", "Lockhart",
    "Lombard",   "Longoria",  "Lorimer",   "Lucerne",   "Lyndale",
    "Macready",  "Madrigal",  "Mallory",   "Mansfield", "Marburg",
    "Mariposa",  "Masako",    "Matlock",   "Maynard",   "McAllister",
    "Mendota",   "Merrick",   "Milborne",  "Mirabel",   "Monclova",
    "Montrose",  "Moravia",   "Morgenthal", "Mulvaney", "Nalca",
    "Navarro",   "Nesbitt",   "Newcombe",  "Nightingale", "Norwood",
    "Nourse",    "Oakhurst",  "Oberlin",   "Ocampo",    "Odette",
    "Okafor",    "Olmstead",  "Ormond",    "Osgood",    "Oswald",
    "Paloma",    "Pembroke",  "Pellicano", "Percival",  "Petrova",
    "Pickering", "Pinecrest", "Polanco",   "Prentice",  "Quimby",
    "Quintana",  "Radcliffe", "Rainier",   "Ramsgate",  "Redmond",
    "Renfrew",   "Reyes",     "Ridgeway",  "Rockwell",  "Romero",
    "Rondeau",   "Rosengren", "Rutledge",  "Saldana",   "Salinger",
    "Sandoval",  "Santiago",  "Saunders",  "Sawtelle",  "SEPA",
    "Septembr",  "Severan",   "Shackleton", "Sheridan", "Sinclair",
    "Solano",    "Somerville", "Sorenson", "Stanfield", "Stanton",
    "Steinbeck", "Stockwell", "Sutherland", "Talmadge", "Tanager",
    "Taoiseach", "Tavares",   "Tewksbury", "Thackeray", "Thornton",
    "Tiberius",  "Torrance",  "Trevino",   "Tristan",   "Tunstall",
    "Ullswater", "Umberto",   "Underwood", "Uplands",   "Uriarte",
    "Valdemar",  "Vanvalkenburg", "Varela", "Vasquez",  "Verdugo",
    "Vermeer",   "Villanueva", "Voss",     "Wadsworth", "Wakefield",
    "Walcott",   "Wardell",   "Waverly",   "Wellesley", "Westcott",
    "Whitaker",  "Wilhelmina", "Winslow",  "Wolcott",   "Wycliffe",
    "Yarmouth",  "Yasna",     "Yellowstone", "Yorktown", "Zambrano",
    "Zephyr",    "Zimmerman", "Zucker",
};

std::vector<std::string> assign_names(const GenParams& p, Rng& rng, int m) {
  std::vector<std::string> names;
  names.reserve(static_cast<size_t>(m));
  if (p.naming_mode == "symbolic") {
    for (int i = 0; i < m; ++i) names.push_back("n" + std::to_string(i + 1));
    return names;
  }
  const std::vector<std::string>& pool =
      p.nouns.empty() ? builtin_nouns() : p.nouns;
  if (pool.empty()) throw std::invalid_argument("empty noun pool");
  std::vector<size_t> perm(pool.size());
  for (size_t i = 0; i < perm.size(); ++i) perm[i] = i;
  rng.shuffle(perm);
  for (int i = 0; i < m; ++i) {
    size_t round = static_cast<size_t>(i) / pool.size();
    const std::string& base = pool[perm[static_cast<size_t>(i) % pool.size()]];
    names.push_back(round == 0 ? base : base + std::to_string(round + 1));
  }
  return names;
}

}  // namespace

const std::vector<std::string>& builtin_nouns() {
  static const std::vector<std::string> nouns(std::begin(kNouns),
                                              std::end(kNouns));
  return nouns;
}

int input_count_for(int m) { return std::max(2, m / 20); }

nlohmann::json GenParams::to_json() const {
  return {{"num_graphs", num_graphs},
          {"m", m},
          {"unary_ratio", unary_ratio},
          {"logic_mode", logic_mode},
          {"naming_mode", naming_mode},
          {"value_min", value_min},
          {"value_max", value_max},
          {"max_hops", max_hops},
          {"max_graphs_per_hop", max_graphs_per_hop},
          {"style", style_name(style)},
          {"seed", seed},
          {"ruleset", rules.to_json()}};
}

ComputationGraph sample_graph(const GenParams& p, int graph_index) {
  if (p.m < 3) throw std::invalid_argument("m must be at least 3");
  if (p.value_min > p.value_max)
    throw std::invalid_argument("empty value range");
  const std::vector<const OperatorSpec*> binary = p.rules.binary_ops();
  const std::vector<const OperatorSpec*> unary = p.rules.unary_ops();
  if (binary.empty())
    throw std::invalid_argument("ruleset needs a binary operator");
  std::vector<const OperatorSpec*> binary_safe;  // total on all operands
  for (const OperatorSpec* op : binary)
    if (op->kind != OpKind::Divide) binary_safe.push_back(op);

  Rng rng(derive_seed(p.seed, {fnv1a("graph"), static_cast<uint64_t>(graph_index)}));
  const int m = p.m;
  const int num_inputs = input_count_for(m);

  ComputationGraph g;
  g.id = "g" + std::to_string(graph_index);
  g.seed = derive_seed(p.seed, {fnv1a("graph"), static_cast<uint64_t>(graph_index)});
  std::vector<std::string> names = assign_names(p, rng, m);
  std::vector<Rational> values(static_cast<size_t>(m));

  for (int i = 0; i < num_inputs; ++i) {
    Node node;
    node.name = names[static_cast<size_t>(i)];
    node.is_input = true;
    node.value = Rational(rng.uniform_int(p.value_min, p.value_max));
    values[static_cast<size_t>(i)] = node.value;
    g.nodes.push_back(std::move(node));
  }

  for (int i = num_inputs; i < m; ++i) {
    bool want_unary = !unary.empty() && rng.bernoulli(p.unary_ratio);
    const std::vector<const OperatorSpec*>& first_pool =
        want_unary ? unary : binary;
    const OperatorSpec* op =
        first_pool[static_cast<size_t>(rng.uniform_int(0, static_cast<long long>(first_pool.size()) - 1))];

    auto draw_parents = [&](int arity) {
      std::vector<int> idx;
      idx.push_back(static_cast<int>(rng.uniform_int(0, i - 1)));
      if (arity == 2) {
        int second = static_cast<int>(rng.uniform_int(0, i - 1));
        for (int guard = 0; second == idx[0] && guard < 64; ++guard)
          second = static_cast<int>(rng.uniform_int(0, i - 1));
        if (second == idx[0]) second = (idx[0] + 1) % i;
        idx.push_back(second);
      }
      return idx;
    };

    Node node;
    node.name = names[static_cast<size_t>(i)];
    node.is_input = false;
    bool placed = false;
    // Phase one keeps the drawn operator and retries operands; phase two
    // falls back to operators that are total on every operand pair.
    for (int attempt = 0; attempt < 32 && !placed; ++attempt) {
      const OperatorSpec* trial = op;
      if (attempt >= 16) {
        if (binary_safe.empty()) break;
        trial = binary_safe[static_cast<size_t>(
            rng.uniform_int(0, static_cast<long long>(binary_safe.size()) - 1))];
      }
      std::vector<int> parents = draw_parents(trial->arity);
      std::vector<Rational> operands;
      for (int pi : parents) operands.push_back(values[static_cast<size_t>(pi)]);
      try {
        Rational v = apply_op(trial->kind, operands);
        node.op = trial->name;
        node.parents.clear();
        for (int pi : parents)
          node.parents.push_back(names[static_cast<size_t>(pi)]);
        values[static_cast<size_t>(i)] = v;
        placed = true;
      } catch (const ValueError&) {
        // operand redraw
      }
    }
    if (!placed)
      throw GraphError("could not place derived node " + node.name);
    g.nodes.push_back(std::move(node));
  }
  g.validate(p.rules);
  return g;
}

std::vector<Path> extract_paths(const ComputationGraph& graph, int max_hops) {
  std::vector<Path> out;
  const size_t n = graph.nodes.size();
  // cone[i] = indices of derived ancestors of node i (node i included when
  // derived), ascending.
  std::vector<std::vector<int>> cone(n);
  for (size_t i = 0; i < n; ++i) {
    const Node& node = graph.nodes[i];
    if (node.is_input) continue;
    std::vector<bool> mark(n, false);
    for (const std::string& parent : node.parents) {
      int pi = graph.index_of(parent);
      if (graph.nodes[static_cast<size_t>(pi)].is_input) continue;
      mark[static_cast<size_t>(pi)] = true;
      for (int anc : cone[static_cast<size_t>(pi)])
        mark[static_cast<size_t>(anc)] = true;
    }
    std::vector<int>& mine = cone[i];
    for (size_t j = 0; j < n; ++j)
      if (mark[j]) mine.push_back(static_cast<int>(j));
    mine.push_back(static_cast<int>(i));

    if (max_hops > 0 && static_cast<int>(mine.size()) > max_hops) continue;
    Path path;
    path.target = node.name;
    for (int idx : mine) path.steps.push_back(graph.nodes[static_cast<size_t>(idx)].name);
    out.push_back(std::move(path));
  }
  return out;
}

nlohmann::json QuestionRecord::to_json() const {
  nlohmann::json j;
  j["question_id"] = question_id;
  j["graph_ref"] = graph_ref;
  j["style"] = style_name(style);
  j["path"] = path.to_json();
  j["hop_count"] = hop_count;
  j["question_text"] = question_text;
  j["target"] = target;
  j["ground_truth"] = ground_truth;
  j["final_answer"] = final_answer;
  nlohmann::json chunk_list = nlohmann::json::array();
  for (const CotStep& c : chunks)
    chunk_list.push_back({{"name", c.name},
                          {"prelude", c.prelude},
                          {"value", c.value},
                          {"tail", c.tail},
                          {"text", c.text}});
  j["chunks"] = std::move(chunk_list);
  return j;
}

QuestionRecord QuestionRecord::from_json(const nlohmann::json& j) {
  QuestionRecord q;
  q.question_id = j.at("question_id").get<std::string>();
  q.graph_ref = j.at("graph_ref").get<std::string>();
  q.style = require_style(j.at("style").get<std::string>());
  q.path = Path::from_json(j.at("path"));
  q.hop_count = j.at("hop_count").get<int>();
  q.question_text = j.at("question_text").get<std::string>();
  q.target = j.at("target").get<std::string>();
  q.ground_truth = j.at("ground_truth").get<std::map<std::string, std::string>>();
  q.final_answer = j.at("final_answer").get<std::string>();
  for (const nlohmann::json& c : j.at("chunks")) {
    CotStep step;
    step.name = c.at("name").get<std::string>();
    step.prelude = c.at("prelude").get<std::string>();
    step.value = c.at("value").get<std::string>();
    step.tail = c.value("tail", std::string());
    // The given chunk carries its bytes only in "text"; derived chunks
    // reassemble from the three parts when "text" is absent.
    step.text = c.value("text", step.prelude + step.value + step.tail);
    q.chunks.push_back(std::move(step));
  }
  return q;
}

QuestionRecord render_question(const ComputationGraph& graph,
                               const RuleSet& rules, Style style,
                               const Path& path) {
  QuestionRecord q;
  q.graph_ref = graph.id;
  q.question_id = graph.id + ":" + path.target;
  q.style = style;
  q.path = path;
  q.hop_count = path.hop_count();
  q.target = path.target;
  q.question_text = build_question_text(graph, rules, style, path.target);
  q.chunks = render_cot_steps(graph, rules, path, style);

  Assignment values = graph.evaluate(rules);
  auto record = [&](const std::string& name) {
    q.ground_truth[name] = values.at(name).str();
  };
  for (const std::string& step : path.steps) {
    record(step);
    for (const std::string& parent : graph.node(step).parents)
      if (graph.node(parent).is_input) record(parent);
  }
  q.final_answer = values.at(path.target).str();
  return q;
}

GenResult generate_questions(const GenParams& params) {
  GenResult result;
  std::vector<QuestionRecord> all;
  for (int gi = 0; gi < params.num_graphs; ++gi) {
    ComputationGraph graph = sample_graph(params, gi);
    for (const Path& path : extract_paths(graph, params.max_hops))
      all.push_back(render_question(graph, params.rules, params.style, path));
    result.graphs.push_back(std::move(graph));
  }

  std::map<int, std::vector<size_t>> by_hop;
  for (size_t i = 0; i < all.size(); ++i)
    by_hop[all[i].hop_count].push_back(i);

  std::vector<bool> keep(all.size(), true);
  for (auto& [hop, indices] : by_hop) {
    if (params.max_graphs_per_hop > 0 &&
        static_cast<int>(indices.size()) > params.max_graphs_per_hop) {
      Rng rng(derive_seed(params.seed,
                          {fnv1a("undersample"), static_cast<uint64_t>(hop)}));
      std::vector<size_t> pool = indices;
      rng.shuffle(pool);
      pool.resize(static_cast<size_t>(params.max_graphs_per_hop));
      std::vector<bool> chosen(all.size(), false);
      for (size_t i : pool) chosen[i] = true;
      for (size_t i : indices)
        if (!chosen[i]) keep[i] = false;
    }
    int kept = 0;
    for (size_t i : indices)
      if (keep[i]) ++kept;
    result.hop_histogram[hop] = kept;
  }
  for (size_t i = 0; i < all.size(); ++i)
    if (keep[i]) result.questions.push_back(std::move(all[i]));
  return result;
}

void write_questions(const std::string& path,
                     const std::vector<QuestionRecord>& questions) {
  std::vector<nlohmann::json> lines;
  lines.reserve(questions.size());
  for (const QuestionRecord& q : questions) lines.push_back(q.to_json());
  write_jsonl(path, lines);
}

std::vector<QuestionRecord> read_questions(const std::string& path) {
  std::vector<QuestionRecord> out;
  for (const nlohmann::json& j : read_jsonl(path))
    out.push_back(QuestionRecord::from_json(j));
  return out;
}

nlohmann::json TransformParams::to_json() const {
  return {{"max_hops", max_hops},
          {"max_items_per_hop", max_items_per_hop},
          {"max_prefixes", max_prefixes},
          {"max_prefix_length", max_prefix_length},
          {"seed", seed}};
}

std::vector<EvalInstance> build_prefixed_instances(const QuestionRecord& q,
                                                   const TransformParams& t) {
  std::vector<EvalInstance> out;
  const int hops = q.hop_count;
  if (static_cast<int>(q.chunks.size()) != hops + 1)
    throw std::runtime_error("question " + q.question_id +
                             ": chunk count disagrees with hop count");
  int k_max = std::min(t.max_prefixes, hops - 1);
  if (t.max_prefix_length > 0) k_max = std::min(k_max, t.max_prefix_length);
  for (int k = 1; k <= k_max; ++k) {
    EvalInstance inst;
    inst.instance_id = q.question_id + ":k" + std::to_string(k);
    inst.source = "syndeduct";
    inst.problem_id = q.question_id;
    inst.graph_ref = q.graph_ref;
    inst.style = q.style;
    inst.question_text = q.question_text;
    inst.target = q.target;
    inst.prefix_k = k;
    inst.hop_total = hops - k;
    std::string prefix;
    for (int j = 0; j <= k; ++j)
      prefix += q.chunks[static_cast<size_t>(j)].text;
    inst.prefix_text = std::move(prefix);
    for (int j = k + 1; j <= hops; ++j) {
      const CotStep& step = q.chunks[static_cast<size_t>(j)];
      inst.per_variable_hops[step.name] = j - k;
      inst.continuation_steps.push_back(step);
    }
    inst.ground_truth = q.ground_truth;
    inst.final_answer = q.final_answer;
    inst.validate();
    out.push_back(std::move(inst));
  }
  return out;
}

TransformResult bin_and_undersample(const std::vector<EvalInstance>& instances,
                                    const TransformParams& t) {
  if (t.max_prefixes <= 0 || t.max_items_per_hop <= 0 || t.max_hops <= 0)
    throw std::invalid_argument("binning parameters must be positive");
  if (t.max_items_per_hop % t.max_prefixes != 0)
    throw std::invalid_argument(
        "max-items-per-hop must be divisible by max-prefixes");
  const int quota = t.max_items_per_hop / t.max_prefixes;

  std::map<std::pair<int, int>, std::vector<size_t>> cells;
  for (size_t i = 0; i < instances.size(); ++i) {
    const EvalInstance& inst = instances[i];
    if (inst.hop_total < 1 || inst.hop_total > t.max_hops) continue;
    if (inst.prefix_k < 1 || inst.prefix_k > t.max_prefixes) continue;
    cells[{inst.hop_total, inst.prefix_k}].push_back(i);
  }

  TransformResult result;
  for (int hop = 1; hop <= t.max_hops; ++hop) {
    for (int prefix = 1; prefix <= t.max_prefixes; ++prefix) {
      std::vector<size_t> pool;
      auto it = cells.find({hop, prefix});
      if (it != cells.end()) pool = it->second;
      if (static_cast<int>(pool.size()) < quota) {
        result.warnings.push_back(
            {hop, prefix, static_cast<int>(pool.size()), quota});
      } else if (static_cast<int>(pool.size()) > quota) {
        Rng rng(derive_seed(t.seed, {fnv1a("bin"), static_cast<uint64_t>(hop),
                                     static_cast<uint64_t>(prefix)}));
        rng.shuffle(pool);
        pool.resize(static_cast<size_t>(quota));
        std::sort(pool.begin(), pool.end());
      }
      result.cell_counts[{hop, prefix}] = static_cast<int>(pool.size());
      for (size_t i : pool) result.instances.push_back(instances[i]);
    }
  }
  return result;
}

TransformResult transform_questions(const std::vector<QuestionRecord>& qs,
                                    const TransformParams& t) {
  std::vector<EvalInstance> all;
  for (const QuestionRecord& q : qs) {
    std::vector<EvalInstance> built = build_prefixed_instances(q, t);
    all.insert(all.end(), std::make_move_iterator(built.begin()),
               std::make_move_iterator(built.end()));
  }
  return bin_and_undersample(all, t);
}

}  // namespace dedcons
