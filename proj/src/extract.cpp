#include "dedcons/extract.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>

#include <nlohmann/json.hpp>

namespace dedcons {

namespace {

bool is_digit(char c) { return std::isdigit(static_cast<unsigned char>(c)); }

std::size_t skip_spaces(std::string_view text, std::size_t pos) {
  while (pos < text.size() &&
         std::isspace(static_cast<unsigned char>(text[pos]))) {
    ++pos;
  }
  return pos;
}

struct NumberScan {
  double value = 0.0;
  std::size_t end = 0;
};

/// Scans one number at pos (no leading-space skipping): optional currency
/// symbol and sign, digits with ",ddd" thousands groups, optional decimal
/// part and exponent.
std::optional<NumberScan> scan_number(std::string_view text, std::size_t pos) {
  std::size_t i = pos;
  bool neg = false;
  if (i < text.size() && (text[i] == '$')) ++i;
  if (i < text.size() && (text[i] == '+' || text[i] == '-')) {
    neg = text[i] == '-';
    ++i;
  }
  if (i < text.size() && text[i] == '$') ++i;

  std::string digits;
  while (i < text.size() && is_digit(text[i])) digits += text[i++];
  if (!digits.empty()) {
    // Thousands groups: strictly ",ddd".
    while (i + 3 < text.size() && text[i] == ',' && is_digit(text[i + 1]) &&
           is_digit(text[i + 2]) && is_digit(text[i + 3]) &&
           (i + 4 >= text.size() || !is_digit(text[i + 4]))) {
      digits += text.substr(i + 1, 3);
      i += 4;
    }
  }
  std::string frac;
  if (i < text.size() && text[i] == '.' && i + 1 < text.size() &&
      is_digit(text[i + 1])) {
    ++i;
    while (i < text.size() && is_digit(text[i])) frac += text[i++];
  }
  if (digits.empty() && frac.empty()) return std::nullopt;

  std::string exp;
  if (i + 1 < text.size() && (text[i] == 'e' || text[i] == 'E')) {
    std::size_t j = i + 1;
    std::string sign;
    if (j < text.size() && (text[j] == '+' || text[j] == '-')) {
      sign += text[j++];
    }
    std::string ed;
    while (j < text.size() && is_digit(text[j])) ed += text[j++];
    if (!ed.empty()) {
      exp = "e" + sign + ed;
      i = j;
    }
  }

  std::string literal = digits.empty() ? "0" : digits;
  if (!frac.empty()) literal += "." + frac;
  literal += exp;
  double v = std::strtod(literal.c_str(), nullptr);
  if (neg) v = -v;
  return NumberScan{v, i};
}

double apply(double lhs, char op, double rhs, bool& ok) {
  switch (op) {
    case '+': return lhs + rhs;
    case '-': return lhs - rhs;
    case '*': return lhs * rhs;
    case '/':
      if (rhs == 0.0) {
        ok = false;
        return 0.0;
      }
      return lhs / rhs;
  }
  ok = false;
  return 0.0;
}

struct ExprScan {
  double value = 0.0;
  std::size_t end = 0;
};

/// Scans "number (op number)*" with left-associative evaluation, consuming an
/// operator only when a number follows it (no partial consumption).
std::optional<ExprScan> scan_expression(std::string_view text,
                                        std::size_t pos) {
  pos = skip_spaces(text, pos);
  auto first = scan_number(text, pos);
  if (!first) return std::nullopt;
  double value = first->value;
  std::size_t end = first->end;
  while (true) {
    std::size_t p = skip_spaces(text, end);
    if (p >= text.size()) break;
    char op = text[p];
    if (op != '+' && op != '-' && op != '*' && op != '/') break;
    std::size_t q = skip_spaces(text, p + 1);
    auto next = scan_number(text, q);
    if (!next) break;
    bool ok = true;
    double v = apply(value, op, next->value, ok);
    if (!ok) break;
    value = v;
    end = next->end;
  }
  return ExprScan{value, end};
}

/// Scans an "expr (= expr)*" chain and yields the final segment's value.
std::optional<ExprScan> scan_chain(std::string_view text, std::size_t pos) {
  auto seg = scan_expression(text, pos);
  if (!seg) return std::nullopt;
  while (true) {
    std::size_t p = skip_spaces(text, seg->end);
    if (p >= text.size() || text[p] != '=') break;
    auto next = scan_expression(text, p + 1);
    if (!next) break;
    seg = next;
  }
  return seg;
}

}  // namespace

std::optional<double> normalize_numeric(std::string_view token) {
  // Trim whitespace, then trailing punctuation that commonly rides along.
  std::size_t b = 0, e = token.size();
  while (b < e && std::isspace(static_cast<unsigned char>(token[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(token[e - 1]))) --e;
  while (e > b) {
    char c = token[e - 1];
    if (c == '.' || c == ',' || c == ';' || c == ':' || c == '!' ||
        c == '?' || c == ')' || c == ']' || c == '*') {
      --e;
    } else {
      break;
    }
  }
  token = token.substr(b, e - b);
  if (token.empty()) return std::nullopt;

  auto expr = scan_expression(token, 0);
  if (!expr) return std::nullopt;
  if (skip_spaces(token, expr->end) != token.size()) return std::nullopt;
  return expr->value;
}

std::optional<double> extract_final_answer(std::string_view text) {
  std::size_t mark = text.rfind("####");
  if (mark == std::string_view::npos) return std::nullopt;
  std::size_t pos = skip_spaces(text, mark + 4);
  std::size_t end = pos;
  while (end < text.size() &&
         !std::isspace(static_cast<unsigned char>(text[end]))) {
    ++end;
  }
  if (end == pos) return std::nullopt;
  return normalize_numeric(text.substr(pos, end - pos));
}

ExtractedAssignment extract_variables_pattern(
    std::string_view text, const std::vector<std::string>& variables) {
  ExtractedAssignment out;
  for (const auto& var : variables) {
    Extraction ex;
    const std::string needle = "value of " + var;
    std::size_t search = 0;
    bool found = false;
    while (search < text.size()) {
      std::size_t hit = text.find(needle, search);
      if (hit == std::string_view::npos) break;
      std::size_t after = hit + needle.size();
      std::size_t eq = skip_spaces(text, after);
      // Name boundary: the next non-space char must be '=' (rejects both
      // longer names sharing the prefix and the question echo).
      if (eq < text.size() && text[eq] == '=') {
        auto chain = scan_chain(text, eq + 1);
        if (chain) {
          if (!found) {
            ex.value = chain->value;
            found = true;
          } else if (*ex.value != chain->value) {
            ex.conflict = true;
          }
        }
      }
      search = hit + 1;
    }
    out.values[var] = ex;
  }
  return out;
}

bool values_match(std::optional<double> predicted, double reference,
                  double rel_tol) {
  if (!predicted) return false;
  double diff = std::fabs(*predicted - reference);
  if (reference == 0.0) return diff <= 1e-9;
  return diff <= rel_tol * std::fabs(reference);
}

ExtractedAssignment parse_extractor_reply(
    std::string_view reply, const std::vector<std::string>& variables) {
  ExtractedAssignment out;
  for (const auto& var : variables) out.values[var] = Extraction{};

  std::size_t open = reply.find("<JSON>");
  std::size_t close = reply.rfind("</JSON>");
  if (open == std::string_view::npos || close == std::string_view::npos ||
      close <= open) {
    out.malformed = true;
    return out;
  }
  std::string body(reply.substr(open + 6, close - open - 6));
  nlohmann::json j = nlohmann::json::parse(body, nullptr, false);
  if (!j.is_object()) {
    out.malformed = true;
    return out;
  }
  for (const auto& var : variables) {
    if (!j.contains(var)) continue;
    const auto& v = j.at(var);
    Extraction ex;
    if (v.is_number()) {
      ex.value = v.get<double>();
    } else if (v.is_string()) {
      std::string s = v.get<std::string>();
      if (s != "None" && s != "none" && s != "null") {
        ex.value = normalize_numeric(s);
      }
    }
    out.values[var] = ex;
  }
  return out;
}

}  // namespace dedcons
