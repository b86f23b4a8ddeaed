// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The cotflow Authors

#include "cotflow/projection.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <regex>

#include <json.hpp>

#include "cotflow/embedded_data.hpp"
#include "cotflow/stats.hpp"
#include "cotflow/text.hpp"

namespace cotflow::projection {

using structure::AnswerKind;

namespace {

// Byte offset of each token in the detokenized text, plus a final sentinel.
std::vector<size_t> token_offsets(const std::vector<std::string>& tokens) {
  std::vector<size_t> off;
  off.reserve(tokens.size() + 1);
  size_t pos = 0;
  for (const auto& t : tokens) {
    off.push_back(pos);
    pos += t.size();
  }
  off.push_back(pos);
  return off;
}

// Index of the token whose bytes contain `pos` (pos < total length).
size_t token_at(const std::vector<size_t>& off, size_t pos) {
  auto it = std::upper_bound(off.begin(), off.end() - 1, pos);
  size_t idx = size_t(it - off.begin()) - 1;
  // skip empty tokens that share the offset
  while (idx + 1 < off.size() - 1 && off[idx + 1] == off[idx]) ++idx;
  return idx;
}

}  // namespace

AnswerPhrase locate_answer_phrase(const TraceRecord& record) {
  const auto& tokens = record.generated_tokens;
  if (tokens.empty()) throw NoAnswerPhrase();
  const std::string textv = record.generated_text();
  const auto hit = text::find_last_phrase(textv, "answer is");
  if (!hit) throw NoAnswerPhrase();
  const auto off = token_offsets(tokens);

  AnswerPhrase out;
  out.span.begin = token_at(off, hit->begin);
  out.span.end = tokens.size();
  for (size_t p = hit->end; p < textv.size(); ++p) {
    if (text::is_sentence_terminator(textv, p)) {
      out.span.end = token_at(off, p) + 1;
      break;
    }
  }
  const size_t is_token = token_at(off, hit->end - 1);
  if (is_token + 1 < tokens.size()) out.answer_step = is_token + 1;
  return out;
}

ProbabilitySequence sequence_probabilities(const TraceRecord& record, TokenSpan span) {
  if (span.begin >= span.end || span.end > record.token_probs.size() || span.end > record.generated_tokens.size()) {
    throw std::out_of_range("invalid token span");
  }
  ProbabilitySequence seq;
  seq.tokens.assign(record.generated_tokens.begin() + long(span.begin), record.generated_tokens.begin() + long(span.end));
  seq.probs.assign(record.token_probs.begin() + long(span.begin), record.token_probs.begin() + long(span.end));
  return seq;
}

double silverman_bandwidth(std::span<const double> samples) {
  if (samples.size() < 2) throw std::domain_error("bandwidth undefined");
  const double sd = stats::sample_sd(samples);
  if (!(sd > 0.0)) throw std::domain_error("bandwidth undefined");
  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  const double iqr = stats::quantile_sorted(sorted, 0.75) - stats::quantile_sorted(sorted, 0.25);
  const double spread = iqr > 0.0 ? std::min(sd, iqr / 1.34) : sd;
  const double h = 0.9 * spread * std::pow(double(samples.size()), -0.2);
  return std::max(h, 1e-3);
}

std::vector<double> uniform_grid(size_t n) {
  if (n < 2) throw std::invalid_argument("grid needs at least two points");
  std::vector<double> g(n);
  for (size_t i = 0; i < n; ++i) g[i] = double(i) / double(n - 1);
  return g;
}

DensityCurve kde_gaussian(std::span<const double> samples, double h, std::span<const double> grid) {
  if (samples.empty()) throw std::invalid_argument("KDE of empty sample");
  if (!(h > 0.0) || !std::isfinite(h)) throw std::invalid_argument("KDE bandwidth must be positive");
  for (double x : samples) {
    if (!(x >= 0.0 && x <= 1.0)) throw std::invalid_argument("KDE samples must lie in [0, 1]");
  }
  const double norm = 1.0 / (double(samples.size()) * h * std::sqrt(2.0 * std::numbers::pi));
  DensityCurve c;
  c.grid.assign(grid.begin(), grid.end());
  c.density.resize(grid.size());
  c.bandwidth = h;
  c.n = samples.size();
  for (size_t g = 0; g < grid.size(); ++g) {
    stats::CompensatedSum s;
    for (double x : samples) {
      const double u = (grid[g] - x) / h;
      s.add(std::exp(-0.5 * u * u));
    }
    c.density[g] = norm * s.value();
  }
  return c;
}

double trapezoid_mass(const DensityCurve& c) {
  stats::CompensatedSum s;
  for (size_t i = 1; i < c.grid.size(); ++i) s.add(0.5 * (c.grid[i] - c.grid[i - 1]) * (c.density[i] + c.density[i - 1]));
  return s.value();
}

// ---------------------------------------------------------------- options

AnswerOptions AnswerOptions::from_json(std::string_view json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
    AnswerOptions o;
    o.strip_leading = j.value("strip_leading", std::string(" \t\n"));
    o.strip_trailing = j.value("strip_trailing", std::string(" \t\n"));
    o.case_fold = j.value("case_fold", true);
    if (j.contains("aliases")) {
      for (const auto& [k, v] : j["aliases"].items()) o.aliases[k] = v.get<std::vector<std::string>>();
    }
    return o;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("answer options: ") + e.what());
  }
}

const AnswerOptions& AnswerOptions::builtin() {
  static const AnswerOptions o = from_json(embedded::answer_options_json);
  return o;
}

std::string AnswerOptions::canonical(std::string_view label) const {
  size_t b = 0, e = label.size();
  while (b < e && strip_leading.find(label[b]) != std::string::npos) ++b;
  while (e > b && strip_trailing.find(label[e - 1]) != std::string::npos) --e;
  std::string out(label.substr(b, e - b));
  if (case_fold) out = text::ascii_lower(out);
  for (const auto& [target, forms] : aliases) {
    for (const auto& f : forms) {
      if ((case_fold ? text::ascii_lower(f) : f) == out) return target;
    }
  }
  return out;
}

StepDistribution answer_step_distribution(const TraceRecord& record, const std::vector<std::string>& answer_space,
                                          const AnswerOptions& options) {
  if (answer_space.empty()) throw std::invalid_argument("empty answer space");
  const auto phrase = locate_answer_phrase(record);
  if (!phrase.answer_step) throw DataError("generation ends at the answer phrase; no answer step");
  const size_t step = *phrase.answer_step;
  if (!record.topk || step >= record.topk->size() || (*record.topk)[step].empty()) {
    throw DataError("no top-k distribution at the answer step");
  }
  const auto& top = (*record.topk)[step];
  std::vector<bool> used(top.tokens.size(), false);
  StepDistribution d;
  d.step = step;
  for (const auto& opt : answer_space) {
    const auto want = options.canonical(opt);
    size_t best = top.tokens.size();
    for (size_t i = 0; i < top.tokens.size(); ++i) {
      if (used[i] || options.canonical(top.tokens[i]) != want) continue;
      if (best == top.tokens.size() || top.probs[i] > top.probs[best]) best = i;
    }
    if (best == top.tokens.size()) throw AnswerSpaceNotCovered(opt);
    used[best] = true;
    d.options.push_back(opt);
    d.raw_probs.push_back(top.probs[best]);
    d.matched_tokens.push_back(top.tokens[best]);
  }
  stats::CompensatedSum total;
  for (double p : d.raw_probs) total.add(p);
  if (!(total.value() > 0.0)) throw DataError("answer-space probabilities sum to zero");
  for (double p : d.raw_probs) d.probs.push_back(p / total.value());
  return d;
}

double entropy(std::span<const double> probs) {
  // summing in sorted order makes the result independent of input order
  std::vector<double> sorted(probs.begin(), probs.end());
  std::sort(sorted.begin(), sorted.end());
  stats::CompensatedSum s;
  for (double p : sorted) {
    if (p > 0.0) s.add(-p * std::log(p));
  }
  return std::max(0.0, s.value());
}

// ---------------------------------------------------------------- extraction

namespace {

struct Pattern {
  const char* id;
  std::regex re;
  int group;
};

const Pattern& pattern_for(AnswerKind kind) {
  static const Pattern numeric{"numeric", std::regex(R"((-?[0-9][0-9,]*(\.[0-9]+)?))"), 1};
  static const Pattern letter{"option_letter", std::regex(R"((^|[^a-z0-9])\(?([a-e])\)?($|[^a-z0-9]))", std::regex::icase), 2};
  static const Pattern yes_no{"yes_no", std::regex(R"((^|[^a-z])(yes|no|true|false)($|[^a-z]))", std::regex::icase), 2};
  static const Pattern date{"date", std::regex(R"((^|[^0-9])([0-9]{2}/[0-9]{2}/[0-9]{4})($|[^0-9]))"), 2};
  switch (kind) {
    case AnswerKind::numeric: return numeric;
    case AnswerKind::option_letter: return letter;
    case AnswerKind::yes_no: return yes_no;
    case AnswerKind::date: return date;
    case AnswerKind::free_text: break;
  }
  throw std::logic_error("free text has no pattern");
}

std::optional<std::string> first_match(const std::string& s, const Pattern& p) {
  std::smatch m;
  if (!std::regex_search(s, m, p.re)) return std::nullopt;
  return m[p.group].str();
}

std::optional<std::string> last_match(const std::string& s, const Pattern& p) {
  std::optional<std::string> last;
  for (auto it = std::sregex_iterator(s.begin(), s.end(), p.re); it != std::sregex_iterator(); ++it) {
    last = (*it)[p.group].str();
  }
  return last;
}

std::string canonical_for(std::string_view value, AnswerKind kind, const AnswerOptions& options) {
  std::string c = options.canonical(value);
  if (kind == AnswerKind::numeric) {
    std::string digits;
    for (char ch : c) {
      if (ch != '$') digits.push_back(ch);
    }
    if (!digits.empty() && (text::is_digit(digits[0]) || digits[0] == '-')) return structure::canonical_number(digits);
    return digits;
  }
  return c;
}

}  // namespace

AnswerExtraction extract_answer(std::string_view generated_in, std::string_view gold, AnswerKind kind,
                                const AnswerOptions& options) {
  const std::string generated(generated_in);
  const auto hit = text::find_last_phrase(generated, "answer is");
  AnswerExtraction out;
  std::optional<std::string> predicted;

  if (kind == AnswerKind::free_text) {
    if (hit) {
      size_t end = generated.size();
      for (size_t p = hit->end; p < generated.size(); ++p) {
        if (text::is_sentence_terminator(generated, p)) {
          end = p;
          break;
        }
      }
      auto tail = text::trim(std::string_view(generated).substr(hit->end, end - hit->end));
      if (!tail.empty()) predicted = tail;
    }
    out.pattern_used = "free_text:after_answer_phrase";
  } else {
    const auto& p = pattern_for(kind);
    if (hit) {
      predicted = first_match(generated.substr(hit->end), p);
      out.pattern_used = std::string(p.id) + ":after_answer_phrase";
    }
    if (!predicted) {
      predicted = last_match(generated, p);
      out.pattern_used = std::string(p.id) + ":last_match";
    }
  }
  if (!predicted) {
    out.unparseable = true;
    out.pattern_used = "unparseable";
    return out;
  }
  out.predicted = *predicted;
  out.correct = canonical_for(out.predicted, kind, options) == canonical_for(gold, kind, options);
  return out;
}

AnswerExtraction extract_answer(const TraceRecord& record, const structure::EntitySpec& spec,
                                const AnswerOptions& options) {
  return extract_answer(record.generated_text(), record.gold_answer, spec.answer_kind, options);
}

double accuracy(const std::vector<AnswerExtraction>& extractions) {
  if (extractions.empty()) throw std::invalid_argument("accuracy of an empty run");
  size_t ok = 0;
  for (const auto& e : extractions) ok += e.correct ? 1 : 0;
  return double(ok) / double(extractions.size());
}

}  // namespace cotflow::projection
