#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <string>
#include <vector>

#include "dedcons/extract.hpp"

using namespace dedcons;

namespace {

std::string repeat(const std::string& seg, int n, std::string& out) {
  for (int i = 0; i < n; ++i) {
    out += seg;
    out += "  ";
  }
  return out;
}

/// A published degenerate model continuation: correct early steps, then a
/// long loop of restatements, then a recovery that still ends with a final
/// answer contradicting its own last derivation.
std::string degenerate_response() {
  std::string r = "    - Given value of Gassman = 5 .  ";
  const std::vector<std::string> head = {
      "Irtysh is the sum of Certain and Gassman. The Computed value of "
      "Irtysh = 15",
      "Horstman is the difference between Masako and Certain. The Computed "
      "value of Horstman = -2",
      "Pellicano is the difference between Horstman and Gassman. The "
      "Computed value of Pellicano = -7",
      "Taoiseach is the difference between Masako and Gassman. The Computed "
      "value of Taoiseach = 3",
      "Vanvalkenburg is the difference between Gassman and Certain. The "
      "Computed value of Vanvalkenburg = -5",
      "Nourse is the sum of Irtysh and Nalca. The Computed value of Nourse "
      "= 15 + 10 = 15",
      "The Computed value of Nourse = 100 + 10 = 100",
      "The Computed value of Nourse = 100 + 10 = 110 + 15 = 115",
      "The Computed value of Nourse = 15 + 10 = 110 + 15 = 115",
      "The Computed value of Nourse = 100 + 15 = 115",
      "The Computed value of Nourse = 15",
      "The Computed value of Nourse = 15",
      "The Computed value of Nourse = 15 + 10 = 25",
      "The Computed value of Nourse = 100",
      "The Computed value of Nourse = 100 + 15 = 115",
      "The Computed value of Nourse = 15 + 15 = 30",
      "The Computed value of Nourse = 100",
      "The Computed value of Nourse = 100",
      "The value of Septembr = 100",
  };
  for (const auto& seg : head) {
    r += seg;
    r += "  ";
  }
  repeat("The value of Rondeau = 10", 3, r);
  repeat("The value of Nalca = 10", 15, r);
  repeat("The value of Malca = 10", 3, r);
  repeat("The value of Maland = 10", 2, r);
  repeat("The value of Mand = 100", 2, r);
  repeat("The value of Nalca = 100", 2, r);
  repeat("The value of Nalca = 10", 1, r);
  for (const char* name :
       {"Salca", "Valca", "Calca", "Galca", "Palca", "Balca", "Talca",
        "Falca"}) {
    repeat(std::string("The value of ") + name + " = 10", 1, r);
  }
  r += "SEPA is the sum of Certain and Irtysh. The Computed value of SEPA = "
       "10 + 15 = 25  ";
  r += "Pellicano is the difference between Horstman and Gassman. The "
       "Computed value of Pellicano = -2 - 5 = -7  ";
  r += "Arvelo is the difference between Pellicano and SEPA. The Computed "
       "value of Arvelo = -7 - 25 = -32 \n#### -3";
  return r;
}

std::string answer_prefix() {
  return "Answer: - Given value of Masako = 8 .\n"
         "- Given value of Nalca = 2 ."
         "Certain is the sum of Nalca and Masako.\n"
         "The Computed value of Certain = 10 ";
}

}  // namespace

TEST_CASE("numeric normalization") {
  CHECK(normalize_numeric("-3") == -3.0);
  CHECK(normalize_numeric("56") == 56.0);
  CHECK(normalize_numeric("3/2") == 1.5);
  CHECK(normalize_numeric("25.5") == 25.5);
  CHECK(normalize_numeric("12+8") == 20.0);
  CHECK(normalize_numeric("12 + 8") == 20.0);
  CHECK(normalize_numeric("12-8") == 4.0);
  CHECK(normalize_numeric("6*7") == 42.0);
  CHECK(normalize_numeric("3/2/3") == 0.5);
  CHECK(normalize_numeric("$1,234.50") == 1234.5);
  CHECK(normalize_numeric("1,000,000") == 1000000.0);
  CHECK(normalize_numeric("  42  ") == 42.0);
  CHECK(normalize_numeric("42.") == 42.0);
  CHECK(normalize_numeric("1.5e2") == 150.0);
  CHECK_FALSE(normalize_numeric("").has_value());
  CHECK_FALSE(normalize_numeric("None").has_value());
  CHECK_FALSE(normalize_numeric("abc").has_value());
  CHECK_FALSE(normalize_numeric("1 2").has_value());
  CHECK_FALSE(normalize_numeric("3/0").has_value());
}

TEST_CASE("final answer extraction") {
  CHECK(extract_final_answer("#### -3") == -3.0);
  CHECK(extract_final_answer("#### 56") == 56.0);
  CHECK(extract_final_answer("steps...\n#### 25.5\n") == 25.5);
  CHECK(extract_final_answer("a #### 3 then more #### 7") == 7.0);
  CHECK(extract_final_answer("#### $56") == 56.0);
  CHECK(extract_final_answer("#### -3.") == -3.0);
  CHECK_FALSE(extract_final_answer("no marker here").has_value());
  CHECK_FALSE(extract_final_answer("####").has_value());
  CHECK_FALSE(extract_final_answer("#### huh").has_value());
}

TEST_CASE("relative tolerance comparison") {
  CHECK(values_match(104.0, 100.0));
  CHECK_FALSE(values_match(106.0, 100.0));
  CHECK(values_match(105.0, 100.0));  // inclusive boundary
  CHECK(values_match(-104.0, -100.0));
  CHECK_FALSE(values_match(-106.0, -100.0));
  CHECK(values_match(0.0, 0.0));
  CHECK_FALSE(values_match(0.001, 0.0));  // absolute fallback at zero
  CHECK_FALSE(values_match(std::nullopt, 1.0));
  CHECK(values_match(-3.0, -3.0));
  CHECK_FALSE(values_match(-3.0, -32.0));  // published wrong final answer
}

TEST_CASE("pattern extraction on the degenerate continuation") {
  const std::string response = degenerate_response();
  const std::vector<std::string> vars = {
      "Certain", "Irtysh",        "Horstman", "Pellicano", "Taoiseach",
      "Nourse",  "Vanvalkenburg", "SEPA",     "Arvelo",    "Wentling"};

  ExtractedAssignment got = extract_variables_pattern(response, vars);
  CHECK(got.get("Irtysh") == 15.0);
  CHECK(got.get("Horstman") == -2.0);
  CHECK(got.get("Pellicano") == -7.0);
  CHECK(got.get("Taoiseach") == 3.0);
  CHECK(got.get("Vanvalkenburg") == -5.0);
  // First derivation wins; the chain "15 + 10 = 15" resolves to its final
  // segment, and the later contradictory restatements set the flag.
  CHECK(got.get("Nourse") == 15.0);
  CHECK(got.values.at("Nourse").conflict);
  CHECK(got.get("SEPA") == 25.0);
  CHECK_FALSE(got.values.at("SEPA").conflict);
  CHECK(got.get("Arvelo") == -32.0);
  CHECK_FALSE(got.values.at("Arvelo").conflict);
  // Pellicano is restated via "-2 - 5 = -7", which agrees.
  CHECK_FALSE(got.values.at("Pellicano").conflict);
  // Certain is only ever referenced, never assigned, in the continuation.
  CHECK_FALSE(got.get("Certain").has_value());
  CHECK_FALSE(got.get("Wentling").has_value());

  // The final answer contradicts the last derivation and misses the
  // reference by far more than the tolerance.
  CHECK(extract_final_answer(response) == -3.0);
  CHECK_FALSE(values_match(extract_final_answer(response), -32.0));

  // Scanning prefix + continuation also recovers the prefix assignments.
  const std::string full = answer_prefix() + response;
  ExtractedAssignment all = extract_variables_pattern(
      full, {"Masako", "Nalca", "Certain", "Arvelo"});
  CHECK(all.get("Masako") == 8.0);
  CHECK_FALSE(all.values.at("Masako").conflict);
  CHECK(all.get("Nalca") == 2.0);
  CHECK(all.values.at("Nalca").conflict);  // later "Nalca = 10" loop
  CHECK(all.get("Certain") == 10.0);
  CHECK_FALSE(all.values.at("Certain").conflict);
  CHECK(all.get("Arvelo") == -32.0);
}

TEST_CASE("pattern extraction ignores the question echo") {
  const std::string text =
      "What is the value of Arvelo?\nAnswer: The Computed value of Arvelo = "
      "-32 ";
  ExtractedAssignment got = extract_variables_pattern(text, {"Arvelo"});
  CHECK(got.get("Arvelo") == -32.0);
  CHECK_FALSE(got.values.at("Arvelo").conflict);
}

TEST_CASE("extractor reply parsing") {
  const std::vector<std::string> vars = {"total_pages", "pages_per_day",
                                         "missing", "absent", "num"};
  ExtractedAssignment got = parse_extractor_reply(
      "Sure, here you go:\n<JSON>{\"total_pages\": \"72\", "
      "\"pages_per_day\": \"12/7\", \"missing\": \"None\", \"num\": 25.5}"
      "</JSON>",
      vars);
  CHECK_FALSE(got.malformed);
  CHECK(got.get("total_pages") == 72.0);
  CHECK(got.get("pages_per_day") == doctest::Approx(12.0 / 7.0));
  CHECK_FALSE(got.get("missing").has_value());
  CHECK_FALSE(got.get("absent").has_value());
  CHECK(got.get("num") == 25.5);

  ExtractedAssignment bad = parse_extractor_reply("no tags at all", vars);
  CHECK(bad.malformed);
  for (const auto& v : vars) CHECK_FALSE(bad.get(v).has_value());

  ExtractedAssignment arr = parse_extractor_reply("<JSON>[1,2]</JSON>", vars);
  CHECK(arr.malformed);
  ExtractedAssignment bro =
      parse_extractor_reply("<JSON>{\"a\": </JSON>", vars);
  CHECK(bro.malformed);
}
