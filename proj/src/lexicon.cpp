// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The cotflow Authors

#include "cotflow/lexicon.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "cotflow/embedded_data.hpp"
#include "cotflow/model.hpp"

namespace cotflow::lexicon {

using text::is_alpha;
using text::is_digit;
using text::is_space;
using text::is_word_char;

std::string_view to_string(Category c) {
  switch (c) {
    case Category::time: return "time";
    case Category::action: return "action";
    case Category::loc_peo: return "loc_peo";
    case Category::number: return "number";
  }
  return "?";
}

std::string_view to_string(Source s) { return s == Source::prompt ? "prompt" : "question"; }

namespace {

bool is_operator(char c) {
  return c == '+' || c == '-' || c == '*' || c == '/' || c == '=' || c == '>' || c == '<';
}

}  // namespace

std::vector<Token> normalize_text(std::string_view input) {
  const std::string s = text::ascii_lower(text::canonicalize_symbols(input));
  std::vector<Token> out;
  size_t i = 0;
  auto emit = [&](size_t b, size_t e) { out.push_back({s.substr(b, e - b), {b, e}}); };
  while (i < s.size()) {
    const char c = s[i];
    if (is_space(c)) {
      ++i;
      continue;
    }
    const bool prev_word = i > 0 && is_word_char(s[i - 1]);
    if (is_digit(c) || ((c == '+' || c == '-') && !prev_word && i + 1 < s.size() && is_digit(s[i + 1]))) {
      const size_t b = i;
      size_t e = text::scan_number(s, is_digit(c) ? i : i + 1);
      if (e < s.size() && is_word_char(s[e])) {
        // "2nd", "5km": one alphanumeric word (a leading sign stays separate)
        if (!is_digit(c)) emit(b, b + 1);
        size_t w = is_digit(c) ? b : b + 1;
        while (e < s.size() && is_word_char(s[e])) ++e;
        emit(w, e);
      } else {
        emit(b, e);
      }
      i = e;
      continue;
    }
    if (is_operator(c)) {
      emit(i, i + 1);
      ++i;
      continue;
    }
    if (is_word_char(c)) {
      size_t e = i;
      while (e < s.size() && is_word_char(s[e])) ++e;
      emit(i, e);
      i = e;
      continue;
    }
    if (c == '\'' && prev_word && is_alpha(s[i - 1]) && i + 1 < s.size() && is_alpha(s[i + 1])) {
      size_t e = i + 1;
      while (e < s.size() && is_alpha(s[e])) ++e;
      emit(i, e);
      i = e;
      continue;
    }
    ++i;
  }
  return out;
}

// ---------------------------------------------------------------- lexicon

namespace {

std::vector<std::string> checked_list(const nlohmann::json& j, const char* name, bool required) {
  auto it = j.find(name);
  if (it == j.end()) {
    if (required) throw DataError(std::string("lexicon: missing list '") + name + "'");
    return {};
  }
  if (!it->is_array()) throw DataError(std::string("lexicon: '") + name + "' must be a list of strings");
  std::vector<std::string> out;
  std::set<std::string> seen;
  for (const auto& w : *it) {
    if (!w.is_string()) throw DataError(std::string("lexicon: '") + name + "' must be a list of strings");
    auto word = w.get<std::string>();
    if (word.empty() || text::trim(word) != word) {
      throw DataError(std::string("lexicon: '") + name + "' has an empty or padded entry");
    }
    if (text::ascii_lower(word) != word) {
      throw DataError(std::string("lexicon: '") + name + "' entry is not lowercase: " + word);
    }
    if (!seen.insert(word).second) throw DataError(std::string("lexicon: '") + name + "' repeats " + word);
    out.push_back(std::move(word));
  }
  if (required && out.empty()) throw DataError(std::string("lexicon: '") + name + "' is empty");
  return out;
}

std::vector<std::string> split_words(const std::string& entry) {
  std::vector<std::string> out;
  std::istringstream in(entry);
  std::string w;
  while (in >> w) out.push_back(w);
  return out;
}

bool has_digit(std::string_view s) { return std::any_of(s.begin(), s.end(), [](char c) { return is_digit(c); }); }

}  // namespace

void TestPointLexicon::compile() {
  try {
    number_re_ = std::regex(number_pattern, std::regex::ECMAScript);
  } catch (const std::regex_error& e) {
    throw DataError("lexicon: number_pattern does not compile: " + std::string(e.what()));
  }
}

TestPointLexicon TestPointLexicon::from_json(std::string_view json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("lexicon: malformed JSON: ") + e.what());
  }
  if (!j.is_object()) throw DataError("lexicon: top level must be an object");
  TestPointLexicon lex;
  lex.time = checked_list(j, "time", true);
  lex.action = checked_list(j, "action", true);
  lex.loc_peo = checked_list(j, "loc_peo", true);
  lex.number_words = checked_list(j, "number_words", false);
  auto it = j.find("number_pattern");
  if (it == j.end() || !it->is_string() || it->get<std::string>().empty()) {
    throw DataError("lexicon: 'number_pattern' must be a non-empty string");
  }
  lex.number_pattern = it->get<std::string>();
  lex.compile();
  return lex;
}

TestPointLexicon TestPointLexicon::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open lexicon file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json(ss.str());
}

const TestPointLexicon& TestPointLexicon::builtin() {
  static const TestPointLexicon lex = from_json(embedded::lexicon_default_json);
  return lex;
}

const std::vector<std::string>& TestPointLexicon::words(Category c) const {
  switch (c) {
    case Category::time: return time;
    case Category::action: return action;
    case Category::loc_peo: return loc_peo;
    case Category::number: return number_words;
  }
  return time;
}

bool TestPointLexicon::is_number(std::string_view token) const {
  if (std::find(number_words.begin(), number_words.end(), token) != number_words.end()) return true;
  // every number the pattern can describe contains a digit; skip the regex otherwise
  if (!has_digit(token)) return false;
  return std::regex_match(token.begin(), token.end(), number_re_);
}

bool TestPointLexicon::operator==(const TestPointLexicon& o) const {
  return time == o.time && action == o.action && loc_peo == o.loc_peo && number_pattern == o.number_pattern &&
         number_words == o.number_words;
}

// ---------------------------------------------------------------- matching

size_t CategoryOccurrences::total() const {
  size_t n = 0;
  for (const auto& v : by_category) n += v.size();
  return n;
}

namespace {

// Longest entry of `words` matching tokens starting at i; 0 if none.
size_t longest_match(const std::vector<std::string>& words, const std::vector<Token>& tokens, size_t i) {
  size_t best = 0;
  for (const auto& entry : words) {
    if (entry.find(' ') == std::string::npos) {
      if (best == 0 && tokens[i].text == entry) best = 1;
      continue;
    }
    const auto parts = split_words(entry);
    if (parts.size() <= best || i + parts.size() > tokens.size()) continue;
    bool ok = true;
    for (size_t k = 0; k < parts.size() && ok; ++k) ok = tokens[i + k].text == parts[k];
    if (ok) best = parts.size();
  }
  return best;
}

}  // namespace

CategoryOccurrences extract_test_points(std::string_view text_in, const TestPointLexicon& lexicon) {
  const auto tokens = normalize_text(text_in);
  CategoryOccurrences occ;
  constexpr std::array<Category, 3> word_order = {Category::action, Category::time, Category::loc_peo};
  size_t i = 0;
  while (i < tokens.size()) {
    if (lexicon.is_number(tokens[i].text)) {
      occ[Category::number].push_back({tokens[i].text, tokens[i].span, i, i + 1});
      ++i;
      continue;
    }
    bool matched = false;
    for (Category c : word_order) {
      const size_t len = longest_match(lexicon.words(c), tokens, i);
      if (len == 0) continue;
      std::string form = tokens[i].text;
      for (size_t k = 1; k < len; ++k) form += " " + tokens[i + k].text;
      occ[c].push_back({std::move(form), {tokens[i].span.begin, tokens[i + len - 1].span.end}, i, i + len});
      i += len;
      matched = true;
      break;
    }
    if (!matched) ++i;
  }
  return occ;
}

std::optional<double> ImitationCell::proportion() const {
  if (generated == 0) return std::nullopt;
  return double(matched) / double(generated);
}

ImitationReport imitation_proportions(const CategoryOccurrences& generated, const CategoryOccurrences& prompt,
                                      const CategoryOccurrences& question) {
  ImitationReport report;
  for (Category c : kCategories) {
    const size_t ci = size_t(c);
    report.prompt_occurrences[ci] = prompt[c].size();
    report.question_occurrences[ci] = question[c].size();
    for (Source s : kSources) {
      const auto& src = s == Source::prompt ? prompt[c] : question[c];
      std::set<std::string_view> forms;
      for (const auto& o : src) forms.insert(o.form);
      auto& cell = report.cells[ci][size_t(s)];
      cell.generated = generated[c].size();
      for (const auto& o : generated[c]) cell.matched += forms.count(o.form);
    }
  }
  return report;
}

ImitationReport imitation_proportions(std::string_view generated, std::string_view prompt, std::string_view question,
                                      const TestPointLexicon& lexicon) {
  return imitation_proportions(extract_test_points(generated, lexicon), extract_test_points(prompt, lexicon),
                               extract_test_points(question, lexicon));
}

std::optional<double> CellMean::mean() const {
  if (defined == 0) return std::nullopt;
  return sum / double(defined);
}

void ImitationAggregate::add(const ImitationReport& report) {
  for (Category c : kCategories) {
    for (Source s : kSources) {
      auto& cell = cells_[size_t(c)][size_t(s)];
      if (auto p = report.proportion(c, s)) {
        cell.sum += *p;
        ++cell.defined;
      } else {
        ++cell.undefined;
      }
    }
  }
  ++records_;
}

void ImitationAggregate::merge(const ImitationAggregate& other) {
  for (size_t c = 0; c < 4; ++c) {
    for (size_t s = 0; s < 2; ++s) {
      cells_[c][s].sum += other.cells_[c][s].sum;
      cells_[c][s].defined += other.cells_[c][s].defined;
      cells_[c][s].undefined += other.cells_[c][s].undefined;
    }
  }
  records_ += other.records_;
}

TransferMatrix transfer_matrix(const std::vector<TransferRun>& runs) {
  TransferMatrix m;
  for (const auto& run : runs) m[{run.prompt_source_dataset, run.target_dataset}].merge(run.aggregate);
  return m;
}

}  // namespace cotflow::lexicon
