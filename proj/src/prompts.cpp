#include "dedcons/prompts.hpp"

#include <stdexcept>

namespace dedcons {

using nlohmann::json;

json PromptBundle::to_json() const {
  json j{{"system_text", system_text},
         {"user_text", user_text},
         {"instance_ref", instance_ref}};
  if (assistant_prefill) j["assistant_prefill"] = *assistant_prefill;
  return j;
}

PromptBundle PromptBundle::from_json(const json& j) {
  PromptBundle b;
  b.system_text = j.at("system_text").get<std::string>();
  b.user_text = j.at("user_text").get<std::string>();
  b.instance_ref = j.at("instance_ref").get<std::string>();
  if (j.contains("assistant_prefill") && !j["assistant_prefill"].is_null())
    b.assistant_prefill = j["assistant_prefill"].get<std::string>();
  return b;
}

namespace {

/// Rule-set block in the map layout the system prompt documents:
/// {"add": {"function": ..., "verbalization": ...}, ...}
std::string ruleset_prompt_block(const RuleSet& rules, Style style) {
  json block = json::object();
  for (const auto& op : rules.operators()) {
    std::string verbalization = op.verbalization;
    if (style != Style::Original) {
      auto it = op.graph_templates.find(style);
      if (it != op.graph_templates.end()) verbalization = it->second;
    }
    block[op.name] = json{{"function", op.doc},
                          {"verbalization", verbalization}};
  }
  return block.dump(2);
}

std::string replace_once(std::string text, const std::string& needle,
                         const std::string& replacement) {
  auto pos = text.find(needle);
  if (pos == std::string::npos)
    throw std::runtime_error("prompt template slot missing: " + needle);
  text.replace(pos, needle.size(), replacement);
  return text;
}

// Fixed worked example shown in the graph-reasoning system prompt.
const char kExampleGraph[] =
    "=== Graph Structure ===\n"
    "Inputs:\n"
    "  - Rondeau (value = 10)\n"
    "  Derived Nodes:\n"
    "  - Septembr is the square of Rondeau.";
const char kExampleQuestion[] = "What is the value of Septembr?";

std::string graph_system_template() {
  std::string t;
  t += "You are a computation graph reasoning assistant designed to evaluate "
       "mathematical expressions described in any style of verbalizations. "
       "Your task is to process a graph structure, interpret the "
       "relationships between nodes based on the provided verbalizations, "
       "and answer questions about specific nodes. \n";
  t += "\n";
  t += "Here are the rules and expectations for your behavior: \n";
  t += "--- \n";
  t += "### Rules: \n";
  t += "{RuleSet.json is filled here}\n";
  t += "\n";
  t += "\n";
  t += "**Graph Structure Processing**: \n";
  t += "   - Nodes are defined as inputs or derived nodes. \n";
  t += "   - Inputs have predefined values. \n";
  t += "   - Derived nodes depend on other nodes and their relationships as "
       "defined by verbalizations. \n";
  t += "\n";
  t += "**Step-by-Step Reasoning**: \n";
  t += "   - Interpret the graph structure line-by-line. \n";
  t += "   - Calculate the value of each derived node based on its "
       "dependencies, ensuring that the verbalization is correctly mapped to "
       "its mathematical function. \n";
  t += "   - Use previously calculated or input values as required. \n";
  t += "\n";
  t += "**Answer Presentation**: \n";
  t += "   - Provide the value of the requested node only after completing "
       "all necessary computations and make sure the value is a integer or a "
       "float. \n";
  t += "   - SHOW THE REASONING STEP-BY-STEP AND PROVIDE THE FINAL ANSWER "
       "CLEARLY, PREFIXED BY `####` and NOTHING AFTER IT. \n";
  t += "   - Suppose answer is 56. You must output `#### 56` at the end of "
       "each step-by-step solution. \n";
  t += "\n";
  t += "   Example 1: \n";
  t += "\n";
  t += "\t{Graph Structure is filled here}  \n";
  t += "\t{Question is filled here}\n";
  t += "\n";
  t += "  \tAnswer:  Rondeau is an input with value 10.\n";
  t += "\t\t\t - Septembr is the square of Rondeau.. The value of Septembr = "
       "100 \n";
  t += "\t\t\t ####100";
  return t;
}

}  // namespace

std::string syndeduct_system_prompt(const RuleSet& rules, Style style) {
  std::string prompt = graph_system_template();
  prompt = replace_once(prompt, "{RuleSet.json is filled here}",
                        ruleset_prompt_block(rules, style));
  prompt = replace_once(prompt, "{Graph Structure is filled here}",
                        kExampleGraph);
  prompt = replace_once(prompt, "{Question is filled here}", kExampleQuestion);
  return prompt;
}

std::string benchmark_system_prompt() {
  return "You are an expert in math. You must answer this question. You give "
         "the step-by-step solution followed by four # symbols followed by "
         "the answer.";
}

PromptBundle build_prompt(const EvalInstance& instance,
                          const PromptTemplates& templates) {
  PromptBundle bundle;
  bundle.instance_ref = instance.instance_id;
  if (instance.source == "syndeduct") {
    bundle.system_text =
        syndeduct_system_prompt(templates.rules, instance.style);
    bundle.user_text = instance.question_text;
  } else {
    bundle.system_text = benchmark_system_prompt();
    bundle.user_text = "Question: " + instance.question_text;
  }
  if (instance.prefix_k >= 1)
    bundle.assistant_prefill = "Answer: " + instance.prefix_text;
  return bundle;
}

std::string extractor_system_prompt() {
  std::string t;
  t += "Instructions:\n";
  t += "You are an expert in comprehension and variable extraction. Your "
       "task is to analyze a question, a step-by-step solution, and a "
       "dictionary of variables and return a JSON object that adheres to the "
       "following rules:\n";
  t += "\n";
  t += "---\n";
  t += "\n";
  t += "Guidelines:\n";
  t += "1. Inputs:\n";
  t += "   - Question: The problem description.\n";
  t += "   - Step-by-step solution: The solution text, where variables may "
       "be explicitly stated or calculated.\n";
  t += "   - Dictionary of variables: Contains variable names and their "
       "descriptions. Not all variables may appear in the question or "
       "solution.\n";
  t += "\n";
  t += "2. Output Format:\n";
  t += "   - Return a JSON object with:\n";
  t += "     - Keys: Variable names from the dictionary.\n";
  t += "     - Values: Numeric values extracted from the solution or "
       "question.\n";
  t += "     - If a value is explicitly mentioned in the step-by-step "
       "solution, extract it without recalculating.\n";
  t += "     - If the variable is not present in the solution or question, "
       "return \"None\".\n";
  t += "     - Values must preserve their original format (e.g., fractions, "
       "decimals, or expressions).\n";
  t += "\n";
  t += "3. Output Structure:\n";
  t += "   - Enclose the output JSON object within <JSON> and </JSON> "
       "tags.\n";
  t += "   - All numeric values must be string representations (e.g., "
       "\"3/2\", \"25.5\", or \"12+8\").\n";
  t += "\n";
  t += "4. Restrictions:\n";
  t += "   - Do not solve the problem yourself or calculate missing "
       "values.\n";
  t += "   - Extract only the values as they appear in the solution.\n";
  t += "\n";
  t += "Example 1:\n";
  t += "Question:\n";
  t += "At a flea market, Hillary sells handmade crafts for 15 dollars per "
       "craft. \n";
  t += "Today, Hillary sells 6 crafts and is given an extra 5 dollars from "
       "an appreciative customer. \n";
  t += "Later on, Hillary deposits 12 dollars from today's profits into her "
       "bank account. \n";
  t += "How many dollars is Hillary left with after making the deposit?\n";
  t += "\n";
  t += "Step-by-step solution:\n";
  t += "Hillary earns \\(15 \\times 6 = 90\\) dollars from selling crafts. \n";
  t += "Adding the extra 5 dollars, she has 90 + 5 = 95 dollars. \n";
  t += "After depositing 12 dollars, she has 95 - 12 = 83 dollars left.\n";
  t += "\n";
  t += "Dictionary of variables:\n";
  t += "{\n";
  t += "    \"price_per_craft\": \"The price of each craft\",\n";
  t += "    \"number_of_crafts\": \"The number of crafts sold\",\n";
  t += "    \"extra_dollars\": \"The extra amount given by the customer\",\n";
  t += "    \"deposit_amount\": \"The amount deposited into the bank "
       "account\",\n";
  t += "    \"total_earnings\": \"The total amount earned from selling "
       "crafts\",\n";
  t += "    \"total_amount\": \"The total amount after receiving the extra "
       "dollars\",\n";
  t += "    \"amount_left\": \"The amount left after depositing\"\n";
  t += "}\n";
  t += "\n";
  t += "Output:\n";
  t += "<JSON> {\n";
  t += "    \"price_per_craft\": \"15\",\n";
  t += "    \"number_of_crafts\": \"6\",\n";
  t += "    \"extra_dollars\": \"5\",\n";
  t += "    \"deposit_amount\": \"12\",\n";
  t += "    \"total_earnings\": \"90\",\n";
  t += "    \"total_amount\": \"95\",\n";
  t += "    \"amount_left\": \"83\"\n";
  t += "} </JSON>\n";
  t += "\n";
  t += "Example 2:\n";
  t += "Question:\n";
  t += "In a truck, there are 5 pink hard hats, 16 green hard hats, and 15 "
       "yellow hard hats. \n";
  t += "Carl takes away 10 pink hard hats. \n";
  t += "John takes away 7 pink hard hats and twice as many green hard hats "
       "as the number of pink hard hats he removed. \n";
  t += "Calculate the total number of hard hats that remained in the "
       "truck.\n";
  t += "\n";
  t += "Step-by-step solution:\n";
  t += "The total number of hats is 5 + 16 + 15 = 36. \n";
  t += "Carl removes 10 pink hats, leaving 36 - 10 = 26. \n";
  t += "John removes 7 pink hats, leaving 26 - 7 = 19. \n";
  t += "John also removes \\(7 \\times 2 = 14\\) green hats, leaving \\(19 - "
       "14 = 5\\) hats in total.\n";
  t += "\n";
  t += "\n";
  t += "Dictionary of variables:\n";
  t += "{\n";
  t += "    \"pink\": \"The number of pink hard hats\",\n";
  t += "    \"green\": \"The number of green hard hats\",\n";
  t += "    \"yellow\": \"The number of yellow hard hats\",\n";
  t += "    \"carl_pink\": \"The number of pink hard hats taken by Carl\",\n";
  t += "    \"john_pink\": \"The number of pink hard hats taken by John\",\n";
  t += "    \"total_initial\": \"The total number of hats initially\",\n";
  t += "    \"total_after_carl\": \"The total number of hats after Carl's "
       "removal\",\n";
  t += "    \"total_after_john_pink\": \"The total number of hats after "
       "John's pink hat removal\",\n";
  t += "    \"john_green\": \"The number of green hats taken by John\",\n";
  t += "    \"total_final\": \"The total number of hats remaining\"\n";
  t += "}\n";
  t += "\n";
  t += "Output:\n";
  t += "<JSON> {\n";
  t += "    \"pink\": \"5\",\n";
  t += "    \"green\": \"16\",\n";
  t += "    \"yellow\": \"15\",\n";
  t += "    \"carl_pink\": \"10\",\n";
  t += "    \"john_pink\": \"7\",\n";
  t += "    \"total_initial\": \"36\",\n";
  t += "    \"total_after_carl\": \"26\",\n";
  t += "    \"total_after_john_pink\": \"19\",\n";
  t += "    \"john_green\": \"14\",\n";
  t += "    \"total_final\": \"5\"\n";
  t += "} </JSON>";
  return t;
}

std::string extractor_user_prompt(const std::string& question,
                                  const std::string& solution,
                                  const json& variable_dictionary,
                                  const std::string& template_hint) {
  std::string t;
  t += "Here is the question and the step-by-step solution to the "
       "problem:\n";
  t += "\n";
  t += "Question: " + question + "\n";
  t += "\n";
  t += "Step-by-step solution: " + solution + "\n";
  t += "\n";
  t += "Dictionary of variables: " + variable_dictionary.dump(4) + "\n";
  t += "\n";
  t += "For more detailed explanation of variables you can see how they "
       "were used in this template: " +
       template_hint;
  return t;
}

std::string judge_system_prompt() {
  std::string t;
  t += "You are reviewing a step-by-step solution to a math problem that "
       "arrived at a wrong value. Classify the mistakes you find into three "
       "categories:\n";
  t += "- understanding: the solution misreads the question or uses a wrong "
       "premise.\n";
  t += "- logical: the solution applies a wrong rule, formula, or reasoning "
       "step.\n";
  t += "- calculation: the solution sets up a correct step but slips in the "
       "arithmetic.\n";
  t += "\n";
  t += "Also report whether every wrong value is merely carried forward "
       "from one earlier mistake (propagated_only).\n";
  t += "\n";
  t += "Reply with a single JSON object enclosed in <JSON> and </JSON> "
       "tags, with boolean values, for example:\n";
  t += "<JSON> {\"understanding\": false, \"logical\": true, "
       "\"calculation\": false, \"propagated_only\": false} </JSON>";
  return t;
}

std::string judge_user_prompt(const std::string& question,
                              const std::string& reference_answer,
                              const std::string& response) {
  std::string t;
  t += "Question:\n" + question + "\n";
  t += "\n";
  t += "Reference answer: " + reference_answer + "\n";
  t += "\n";
  t += "Model response:\n" + response;
  return t;
}

}  // namespace dedcons
