// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The cotflow Authors

#include "cotflow/structure.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "cotflow/embedded_data.hpp"
#include "cotflow/lexicon.hpp"
#include "cotflow/stats.hpp"

namespace cotflow::structure {

using text::is_alpha;
using text::is_digit;
using text::is_upper;
using text::is_word_char;
using text::Span;

std::string_view to_string(Domain d) {
  switch (d) {
    case Domain::arithmetic: return "arithmetic";
    case Domain::commonsense_general: return "commonsense_general";
    case Domain::date: return "date";
    case Domain::coin_flip: return "coin_flip";
    case Domain::last_letter: return "last_letter";
  }
  return "?";
}

Domain parse_domain(std::string_view s) {
  for (Domain d : {Domain::arithmetic, Domain::commonsense_general, Domain::date, Domain::coin_flip,
                   Domain::last_letter}) {
    if (to_string(d) == s) return d;
  }
  throw DataError("unknown task domain: " + std::string(s));
}

std::string_view to_string(AnswerKind k) {
  switch (k) {
    case AnswerKind::numeric: return "numeric";
    case AnswerKind::option_letter: return "option_letter";
    case AnswerKind::yes_no: return "yes_no";
    case AnswerKind::date: return "date";
    case AnswerKind::free_text: return "free_text";
  }
  return "?";
}

AnswerKind parse_answer_kind(std::string_view s) {
  for (AnswerKind k : {AnswerKind::numeric, AnswerKind::option_letter, AnswerKind::yes_no, AnswerKind::date,
                       AnswerKind::free_text}) {
    if (to_string(k) == s) return k;
  }
  throw DataError("unknown answer kind: " + std::string(s));
}

// ---------------------------------------------------------------- spec table

namespace {

std::string normalize_name(std::string_view name) {
  std::string out = text::ascii_lower(text::trim(name));
  for (char& c : out) {
    if (c == '-' || c == ' ') c = '_';
  }
  return out;
}

std::vector<std::string> string_list(const nlohmann::json& j, const std::string& where) {
  if (!j.is_array()) throw DataError(where + " must be a list of strings");
  std::vector<std::string> out;
  for (const auto& v : j) {
    if (!v.is_string()) throw DataError(where + " must be a list of strings");
    out.push_back(v.get<std::string>());
  }
  return out;
}

void apply(EntitySpec& spec, const nlohmann::json& obj, const std::string& where) {
  for (const auto& [key, v] : obj.items()) {
    const std::string at = where + "." + key;
    try {
      if (key == "domain") spec.domain = parse_domain(v.get<std::string>());
      else if (key == "answer_kind") spec.answer_kind = parse_answer_kind(v.get<std::string>());
      else if (key == "process_verbs") spec.process_verbs = string_list(v, at);
      else if (key == "verb_threshold") {
        spec.verb_threshold = v.get<int>();
        if (spec.verb_threshold < 0) throw DataError(at + " must be >= 0");
      } else if (key == "stage1_source") {
        const auto s = v.get<std::string>();
        if (s == "question") spec.stage1_source = Stage1Source::question;
        else if (s == "question_and_prompt") spec.stage1_source = Stage1Source::question_and_prompt;
        else throw DataError(at + " must be \"question\" or \"question_and_prompt\"");
      } else if (key == "exclude_answer_choices") spec.exclude_answer_choices = v.get<bool>();
      else if (key == "content_words") spec.content_words = v.get<bool>();
      else if (key == "name_words") spec.name_words = string_list(v, at);
      else if (key == "location_words") spec.location_words = string_list(v, at);
      else if (key == "time_words") spec.time_words = string_list(v, at);
      else if (key == "stopwords") spec.stopwords = string_list(v, at);
      else if (key == "answer_space") spec.answer_space = string_list(v, at);
      else if (key == "aliases") continue;
      else throw DataError("unknown entity-spec field " + at);
    } catch (const nlohmann::json::exception&) {
      throw DataError(at + " has the wrong type");
    }
  }
  for (auto* list : {&spec.name_words, &spec.location_words, &spec.time_words, &spec.stopwords,
                     &spec.process_verbs}) {
    for (auto& w : *list) w = text::ascii_lower(w);
  }
}

}  // namespace

EntitySpecs EntitySpecs::from_json(std::string_view json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("entity spec: malformed JSON: ") + e.what());
  }
  if (!j.is_object() || !j.contains("datasets") || !j["datasets"].is_object()) {
    throw DataError("entity spec: expected an object with a \"datasets\" object");
  }
  EntitySpec base;
  if (j.contains("defaults")) apply(base, j["defaults"], "defaults");
  EntitySpecs out;
  for (const auto& [name, entry] : j["datasets"].items()) {
    if (!entry.is_object()) throw DataError("entity spec: datasets." + name + " must be an object");
    EntitySpec spec = base;
    spec.dataset = name;
    apply(spec, entry, "datasets." + name);
    const size_t idx = out.specs_.size();
    out.specs_.push_back(std::move(spec));
    out.names_.push_back({normalize_name(name), idx});
    if (entry.contains("aliases")) {
      for (const auto& a : string_list(entry["aliases"], "datasets." + name + ".aliases")) {
        out.names_.push_back({normalize_name(a), idx});
      }
    }
  }
  return out;
}

EntitySpecs EntitySpecs::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open entity spec file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json(ss.str());
}

const EntitySpecs& EntitySpecs::builtin() {
  static const EntitySpecs specs = from_json(embedded::datasets_json);
  return specs;
}

const EntitySpec& EntitySpecs::for_dataset(std::string_view name) const {
  const auto key = normalize_name(name);
  for (const auto& [n, idx] : names_) {
    if (n == key) return specs_[idx];
  }
  throw DataError("no entity spec for dataset '" + std::string(name) + "'");
}

// ---------------------------------------------------------------- entity sets

bool EntitySet::contains(std::string_view value) const {
  return std::any_of(entities.begin(), entities.end(), [&](const Entity& e) { return e.value == value; });
}

std::set<std::string> EntitySet::values() const {
  std::set<std::string> out;
  for (const auto& e : entities) out.insert(e.value);
  return out;
}

void EntitySet::insert(Entity e) {
  if (!contains(e.value)) entities.push_back(std::move(e));
}

std::string canonical_number(std::string_view literal) {
  std::string s;
  for (char c : literal) {
    if (c != ',') s.push_back(c);
  }
  std::string sign;
  if (!s.empty() && (s[0] == '-' || s[0] == '+')) {
    if (s[0] == '-') sign = "-";
    s.erase(0, 1);
  }
  std::string frac;
  if (auto dot = s.find('.'); dot != std::string::npos) {
    frac = s.substr(dot + 1);
    s.resize(dot);
  }
  while (s.size() > 1 && s[0] == '0') s.erase(0, 1);
  if (s.empty()) s = "0";
  while (!frac.empty() && frac.back() == '0') frac.pop_back();
  std::string out = s;
  if (!frac.empty()) out += "." + frac;
  if (out == "0") sign.clear();
  return sign + out;
}

namespace {

const std::map<std::string, std::string, std::less<>>& number_word_values() {
  static const std::map<std::string, std::string, std::less<>> m = {
      {"zero", "0"},      {"one", "1"},        {"two", "2"},       {"three", "3"},     {"four", "4"},
      {"five", "5"},      {"six", "6"},        {"seven", "7"},     {"eight", "8"},     {"nine", "9"},
      {"ten", "10"},      {"eleven", "11"},    {"twelve", "12"},   {"thirteen", "13"}, {"fourteen", "14"},
      {"fifteen", "15"},  {"sixteen", "16"},   {"seventeen", "17"}, {"eighteen", "18"}, {"nineteen", "19"},
      {"twenty", "20"},   {"thirty", "30"},    {"forty", "40"},    {"fifty", "50"},    {"sixty", "60"},
      {"seventy", "70"},  {"eighty", "80"},    {"ninety", "90"},   {"hundred", "100"},
  };
  return m;
}

enum class PieceKind { number, date, word };

struct Piece {
  PieceKind kind;
  Span span;
};

bool is_date_at(std::string_view s, size_t i) {
  if (i + 10 > s.size()) return false;
  static constexpr std::string_view shape = "dd/dd/dddd";
  for (size_t k = 0; k < shape.size(); ++k) {
    if (shape[k] == 'd' ? !is_digit(s[i + k]) : s[i + k] != '/') return false;
  }
  return i + 10 == s.size() || !is_digit(s[i + 10]);
}

// Number literals (and optionally MM/DD/YYYY dates) and word runs, in order.
std::vector<Piece> scan(std::string_view s, bool dates) {
  std::vector<Piece> out;
  size_t i = 0;
  while (i < s.size()) {
    const char c = s[i];
    const bool boundary = i == 0 || !is_word_char(s[i - 1]);
    if (is_digit(c) && boundary) {
      if (dates && is_date_at(s, i)) {
        out.push_back({PieceKind::date, {i, i + 10}});
        i += 10;
        continue;
      }
      const size_t e = text::scan_number(s, i);
      out.push_back({PieceKind::number, {i, e}});
      i = e;
      while (i < s.size() && is_word_char(s[i])) ++i;  // "5th", "2nd"
      continue;
    }
    if (is_word_char(c)) {
      size_t e = i;
      while (e < s.size() && is_word_char(s[e])) ++e;
      out.push_back({PieceKind::word, {i, e}});
      i = e;
      continue;
    }
    ++i;
  }
  return out;
}

bool in(const std::vector<std::string>& list, std::string_view w) {
  return std::find(list.begin(), list.end(), w) != list.end();
}

bool all_lower_alpha(std::string_view w) {
  return !w.empty() && std::all_of(w.begin(), w.end(), [](char c) { return c >= 'a' && c <= 'z'; });
}

// Byte offsets of the first word of each sentence.
std::set<size_t> sentence_initial_words(std::string_view s) {
  std::set<size_t> out;
  for (const auto& sent : text::split_sentences(s)) {
    size_t i = sent.begin;
    while (i < sent.end && !is_word_char(s[i])) ++i;
    if (i < sent.end) out.insert(i);
  }
  return out;
}

void add_number(EntitySet& set, std::string_view s, Span sp) {
  set.insert({canonical_number(s.substr(sp.begin, sp.size())), std::string(s.substr(sp.begin, sp.size())), sp});
}

bool add_number_word(EntitySet& set, std::string_view s, Span sp) {
  const auto lower = text::ascii_lower(s.substr(sp.begin, sp.size()));
  const auto& words = number_word_values();
  auto it = words.find(lower);
  if (it == words.end()) return false;
  set.insert({it->second, std::string(s.substr(sp.begin, sp.size())), sp});
  return true;
}

EntitySet quoted_words(std::string_view s) {
  EntitySet set;
  size_t i = 0;
  while ((i = s.find('"', i)) != std::string_view::npos) {
    const size_t close = s.find('"', i + 1);
    if (close == std::string_view::npos) break;
    const auto inner = s.substr(i + 1, close - i - 1);
    for (const auto& p : scan(inner, false)) {
      const Span sp{i + 1 + p.span.begin, i + 1 + p.span.end};
      const std::string surface(s.substr(sp.begin, sp.size()));
      set.insert({text::ascii_lower(surface), surface, sp});
    }
    i = close + 1;
  }
  return set;
}

}  // namespace

EntitySet extract_entities(std::string_view text_in, const EntitySpec& spec) {
  const std::string canon = text::canonicalize_symbols(text_in);
  const std::string_view s = canon;
  if (spec.domain == Domain::last_letter) return quoted_words(s);

  EntitySet set;
  const auto pieces = scan(s, spec.domain == Domain::date);
  const auto initial = spec.domain == Domain::commonsense_general ? sentence_initial_words(s) : std::set<size_t>{};
  for (const auto& p : pieces) {
    const auto surface = s.substr(p.span.begin, p.span.size());
    if (p.kind == PieceKind::date) {
      set.insert({std::string(surface), std::string(surface), p.span});
      continue;
    }
    if (p.kind == PieceKind::number) {
      add_number(set, s, p.span);
      continue;
    }
    const auto lower = text::ascii_lower(surface);
    switch (spec.domain) {
      case Domain::arithmetic:
      case Domain::date:
        add_number_word(set, s, p.span);
        break;
      case Domain::coin_flip:
        if (is_upper(surface[0]) && !in(spec.stopwords, lower)) set.insert({lower, std::string(surface), p.span});
        break;
      case Domain::commonsense_general: {
        const bool lexicon_hit =
            in(spec.time_words, lower) || in(spec.name_words, lower) || in(spec.location_words, lower);
        const bool stop = in(spec.stopwords, lower);
        const bool capitalized = is_upper(surface[0]) && !initial.count(p.span.begin) && !stop;
        const bool content = spec.content_words && all_lower_alpha(surface) && surface.size() >= 3 && !stop;
        if (lexicon_hit || capitalized || content) set.insert({lower, std::string(surface), p.span});
        break;
      }
      case Domain::last_letter:
        break;
    }
  }
  return set;
}

std::string render_entities(const EntitySet& set, const EntitySpec& spec) {
  std::string out;
  auto join = [&](const char* sep, bool surface) {
    for (size_t i = 0; i < set.entities.size(); ++i) {
      if (i) out += sep;
      out += surface ? set.entities[i].surface : set.entities[i].value;
    }
  };
  switch (spec.domain) {
    case Domain::arithmetic:
    case Domain::date:
      join(" ; ", false);
      break;
    case Domain::coin_flip:
      join(" ; ", true);
      break;
    case Domain::commonsense_general:
      // a leading stopword keeps every entity away from sentence-initial position
      out = "the ";
      join(" ; ", true);
      break;
    case Domain::last_letter:
      out = "\"";
      join(" ", true);
      out += "\"";
      break;
  }
  return out;
}

// ---------------------------------------------------------------- stages

FinalAnswer detect_final_answer(std::string_view generated) {
  const auto sentences = text::split_sentences(generated);
  if (sentences.empty()) return {};
  const Span last = sentences.back();
  const auto hit = text::find_last_phrase(generated.substr(last.begin, last.size()), "the answer is");
  if (!hit) return {};
  return {true, {last.begin + hit->begin, last.end}};
}

std::optional<Span> answer_statement_span(std::string_view generated) {
  const auto fa = detect_final_answer(generated);
  if (!fa.found) return std::nullopt;
  return Span{fa.span.begin, generated.size()};
}

int count_process_verbs(std::string_view text_in, const EntitySpec& spec) {
  int n = 0;
  for (const auto& tok : lexicon::normalize_text(text_in)) {
    if (in(spec.process_verbs, tok.text)) ++n;
  }
  return n;
}

ReasoningEvidence detect_reasoning_steps(std::string_view generated, const EntitySet& input_entities,
                                         const EntitySpec& spec, bool exclude_answer_statement) {
  std::string_view body = generated;
  if (exclude_answer_statement) {
    if (auto sp = answer_statement_span(generated)) body = generated.substr(0, sp->begin);
  }
  ReasoningEvidence ev;
  if (spec.uses_verbs()) {
    ev.verb_count = count_process_verbs(body, spec);
    ev.reasoning = *ev.verb_count > spec.verb_threshold;
    return ev;
  }
  for (const auto& e : extract_entities(body, spec).entities) {
    if (!input_entities.contains(e.value)) ev.new_entities.push_back(e.value);
  }
  ev.reasoning = !ev.new_entities.empty();
  return ev;
}

std::string stage1_text(std::string_view question, const EntitySpec& spec) {
  if (!spec.exclude_answer_choices) return std::string(question);
  const auto lower = text::ascii_lower(question);
  const auto at = lower.find("answer choices");
  return std::string(at == std::string::npos ? question : question.substr(0, at));
}

AdherenceVerdict adherence(std::string_view question, std::string_view prompt, std::string_view generated,
                           const EntitySpec& spec) {
  if (text::trim(question).empty()) throw std::invalid_argument("adherence needs a non-empty question");
  AdherenceVerdict v;
  v.stage1_entities = extract_entities(stage1_text(question, spec), spec);
  if (spec.stage1_source == Stage1Source::question_and_prompt) {
    for (auto& e : extract_entities(prompt, spec).entities) v.stage1_entities.insert(std::move(e));
  }
  v.stage2 = detect_reasoning_steps(generated, v.stage1_entities, spec, true);
  v.stage3 = detect_final_answer(generated);
  v.adherent = v.stage2.reasoning && v.stage3.found;
  return v;
}

AdherenceVerdict adherence(const TraceRecord& record, const EntitySpec& spec) {
  return adherence(record.question_text, record.prompt_text, record.generated_text(), spec);
}

size_t imitation_count(const std::vector<AdherenceVerdict>& verdicts) {
  return size_t(std::count_if(verdicts.begin(), verdicts.end(), [](const auto& v) { return v.adherent; }));
}

CorrelationResult adherence_accuracy_correlation(const std::vector<CorrelationPoint>& points) {
  const size_t n = points.size();
  if (n < 2) throw std::domain_error("undefined correlation");
  stats::CompensatedSum sx, sy;
  for (const auto& p : points) {
    sx.add(p.imitation_count);
    sy.add(p.accuracy);
  }
  const double mx = sx.value() / double(n), my = sy.value() / double(n);
  stats::CompensatedSum sxx, syy, sxy;
  for (const auto& p : points) {
    const double dx = p.imitation_count - mx, dy = p.accuracy - my;
    sxx.add(dx * dx);
    syy.add(dy * dy);
    sxy.add(dx * dy);
  }
  if (sxx.value() <= 0.0 || syy.value() <= 0.0) throw std::domain_error("undefined correlation");
  CorrelationResult out;
  out.n = n;
  out.r = std::clamp(sxy.value() / std::sqrt(sxx.value() * syy.value()), -1.0, 1.0);
  out.slope = sxy.value() / sxx.value();
  out.intercept = my - out.slope * mx;
  return out;
}

}  // namespace cotflow::structure
