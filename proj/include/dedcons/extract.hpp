#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace dedcons {

/// Parses one loose numeric token. Accepts integers, decimals, thousands
/// separators, leading currency symbols, a/b fractions and a single binary
/// expression ("12+8"). Returns nullopt for anything else; never throws.
std::optional<double> normalize_numeric(std::string_view token);

/// Final-answer extraction: the token after the LAST "####" marker.
std::optional<double> extract_final_answer(std::string_view text);

struct Extraction {
  std::optional<double> value;
  /// Later restatements of the same variable disagreed with the first
  /// occurrence (which is the one reported); kept for audit.
  bool conflict = false;
};

struct ExtractedAssignment {
  std::map<std::string, Extraction> values;
  bool malformed = false;  ///< LM backend reply could not be parsed

  std::optional<double> get(const std::string& name) const {
    auto it = values.find(name);
    if (it == values.end()) return std::nullopt;
    return it->second.value;
  }
};

/// Pattern backend: scans for "value of {name} = {expr}" (covering "The
/// Computed value of", "Given value of", "The value of"). The first
/// parseable occurrence wins; a chained expression "a + b = c" resolves to
/// its final term.
ExtractedAssignment extract_variables_pattern(
    std::string_view text, const std::vector<std::string>& variables);

/// Relative-tolerance comparison: |p - r| <= rel_tol * |r|, with an absolute
/// fallback of 1e-9 when the reference is zero. nullopt never matches.
bool values_match(std::optional<double> predicted, double reference,
                  double rel_tol = 0.05);

/// Parses an LM extractor reply: a <JSON>{...}</JSON> block mapping variable
/// names to values or "None". Unparseable replies yield all-None values with
/// malformed = true.
ExtractedAssignment parse_extractor_reply(
    std::string_view reply, const std::vector<std::string>& variables);

}  // namespace dedcons
