// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The cotflow Authors

#include "cotflow/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "cotflow/lexicon.hpp"
#include "cotflow/projection.hpp"
#include "cotflow/structure.hpp"
#include "cotflow/trace_io.hpp"

namespace cotflow::synth {

namespace {

// splitmix64 finalizer, used to derive independent per-record seeds
uint64_t mix(uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

class Rng {
 public:
  Rng(uint64_t seed, uint64_t stream, uint64_t index) : eng_(mix(mix(seed ^ mix(stream)) ^ index)) {}

  /// Uniform in [0, n).
  uint64_t below(uint64_t n) {
    const uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    uint64_t x;
    do {
      x = eng_();
    } while (x >= limit);
    return x % n;
  }
  /// Uniform in [0, 1) with 53 random bits.
  double unit() { return double(eng_() >> 11) * 0x1.0p-53; }

  template <class T>
  void shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[below(i)]);
  }

 private:
  std::mt19937_64 eng_;
};

enum Stream : uint64_t { kSelect = 1, kCot = 2, kStandard = 3, kCotActs = 4, kStdActs = 5 };

int64_t round_half_up(double x) { return int64_t(std::floor(x + 0.5)); }

constexpr std::array<const char*, 4> kCategoryNames = {"time", "action", "loc_peo", "number"};

// Surface forms per category, one per class: both, prompt-only, question-only, neither.
constexpr std::array<std::array<const char*, 4>, 4> kForms = {{
    {"originally", "finally", "meanwhile", "subsequently"},
    {"add", "subtract", "multiply", "divide"},
    {"location", "site", "venue", "someone"},
    {"101", "202", "303", "404"},
}};
enum Class { kBoth = 0, kPromptOnly = 1, kQuestionOnly = 2, kNeither = 3 };

constexpr std::array<const char*, 10> kFiller = {"zorb", "quix", "blen", "trop", "vask",
                                                 "mulk", "prin", "dwel", "skog", "frim"};

std::string capitalize(std::string w) {
  if (!w.empty() && w[0] >= 'a' && w[0] <= 'z') w[0] = char(w[0] - 'a' + 'A');
  return w;
}

struct Counts {
  std::array<int, 4> n{};  // by class
};

Counts class_counts(const PlantedImitation& p, int k) {
  const int mp = int(round_half_up(p.prompt * k));
  const int mq = int(round_half_up(p.question * k));
  Counts c;
  c.n[kBoth] = std::max(0, mp + mq - k);
  c.n[kPromptOnly] = mp - c.n[kBoth];
  c.n[kQuestionOnly] = mq - c.n[kBoth];
  c.n[kNeither] = k - c.n[kBoth] - c.n[kPromptOnly] - c.n[kQuestionOnly];
  return c;
}

double get_fraction(const nlohmann::json& v, const std::string& name) {
  if (!v.is_number()) throw SpecError("synth spec: " + name + " must be a number");
  const double x = v.get<double>();
  if (!(x >= 0.0 && x <= 1.0)) throw SpecError("synth spec: " + name + " must lie in [0, 1]");
  return x;
}

std::vector<double> get_means(const nlohmann::json& v, const std::string& name) {
  if (!v.is_array()) throw SpecError("synth spec: " + name + " must be a list of numbers");
  std::vector<double> out;
  for (const auto& x : v) {
    if (!x.is_number()) throw SpecError("synth spec: " + name + " must be a list of numbers");
    out.push_back(x.get<double>());
  }
  return out;
}

bool has_category(const SynthSpec& s, int c) { return s.planted_imitation.count(kCategoryNames[size_t(c)]) > 0; }

}  // namespace

// ---------------------------------------------------------------- spec

SynthSpec SynthSpec::from_json(std::string_view json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw SpecError(std::string("synth spec: malformed JSON: ") + e.what());
  }
  if (!j.is_object()) throw SpecError("synth spec: top level must be an object");
  SynthSpec s;
  try {
    for (const auto& [key, v] : j.items()) {
      if (key == "num_records") s.num_records = v.get<int64_t>();
      else if (key == "num_steps") s.num_steps = v.get<uint32_t>();
      else if (key == "num_layers") s.num_layers = v.get<uint32_t>();
      else if (key == "ffn_width") s.ffn_width = v.get<uint32_t>();
      else if (key == "rng_seed") s.rng_seed = v.get<uint64_t>();
      else if (key == "dataset") s.dataset = v.get<std::string>();
      else if (key == "prompt_source_dataset") s.prompt_source_dataset = v.get<std::string>();
      else if (key == "model") s.model = v.get<std::string>();
      else if (key == "created_at") s.created_at = v.get<std::string>();
      else if (key == "record_mean_jitter") s.record_mean_jitter = v.get<int64_t>();
      else if (key == "occurrences_per_category") s.occurrences_per_category = v.get<int>();
      else if (key == "activations") s.activations = v.get<bool>();
      else if (key == "planted_adherent_fraction") s.planted_adherent_fraction = get_fraction(v, key);
      else if (key == "answer_space") s.answer_space = v.get<std::vector<std::string>>();
      else if (key == "planted_layer_means") {
        for (const auto& [kind, means] : v.items()) {
          if (kind == "cot") s.planted_cot_means = get_means(means, key + ".cot");
          else if (kind == "standard") s.planted_standard_means = get_means(means, key + ".standard");
          else throw SpecError("synth spec: planted_layer_means has unknown kind " + kind);
        }
      } else if (key == "planted_imitation") {
        for (const auto& [cat, pq] : v.items()) {
          if (std::find_if(kCategoryNames.begin(), kCategoryNames.end(), [&](const char* n) { return cat == n; }) ==
              kCategoryNames.end()) {
            throw SpecError("synth spec: unknown imitation category " + cat);
          }
          PlantedImitation p;
          for (const auto& [src, x] : pq.items()) {
            if (src == "prompt") p.prompt = get_fraction(x, key + "." + cat + ".prompt");
            else if (src == "question") p.question = get_fraction(x, key + "." + cat + ".question");
            else throw SpecError("synth spec: unknown imitation source " + src);
          }
          s.planted_imitation[cat] = p;
        }
      } else if (key == "planted_accuracy") {
        for (const auto& [kind, x] : v.items()) {
          if (kind == "cot") s.planted_cot_accuracy = get_fraction(x, key + ".cot");
          else if (kind == "standard") s.planted_standard_accuracy = get_fraction(x, key + ".standard");
          else throw SpecError("synth spec: planted_accuracy has unknown kind " + kind);
        }
      } else {
        throw SpecError("synth spec: unknown field " + key);
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw SpecError(std::string("synth spec: wrong type: ") + e.what());
  }
  if (s.planted_cot_means.empty()) s.planted_cot_means.assign(s.num_layers, 0.0);
  if (s.planted_standard_means.empty()) s.planted_standard_means.assign(s.num_layers, 0.0);
  s.check();
  return s;
}

SynthSpec SynthSpec::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw SpecError("cannot open synth spec: " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json(ss.str());
}

void SynthSpec::check() const {
  if (num_records < 0) throw SpecError("synth spec: num_records must be >= 0");
  if (num_steps < 1 || num_layers < 1 || ffn_width < 1) {
    throw SpecError("synth spec: num_steps, num_layers and ffn_width must be positive");
  }
  for (const auto* means : {&planted_cot_means, &planted_standard_means}) {
    if (means->size() != num_layers) throw SpecError("synth spec: planted layer means need one value per layer");
    for (double m : *means) {
      if (!(m >= 0.0 && m <= double(ffn_width))) {
        throw SpecError("synth spec: planted layer mean " + std::to_string(m) + " outside [0, ffn_width]");
      }
      const int64_t sum = round_half_up(m * num_steps);
      const int64_t j = num_records >= 2 ? std::llabs(record_mean_jitter) : 0;
      if (sum - j < 0 || sum + j > int64_t(num_steps) * ffn_width) {
        throw SpecError("synth spec: record_mean_jitter pushes a layer sum outside [0, T * ffn_width]");
      }
    }
  }
  for (double f : {planted_adherent_fraction, planted_cot_accuracy.value_or(0), planted_standard_accuracy.value_or(0)}) {
    if (!(f >= 0.0 && f <= 1.0)) throw SpecError("synth spec: fractions must lie in [0, 1]");
  }
  if (!planted_imitation.empty() && occurrences_per_category < 1) {
    throw SpecError("synth spec: occurrences_per_category must be >= 1");
  }

  const auto& es = structure::EntitySpecs::builtin().for_dataset(dataset);
  if (es.domain != structure::Domain::arithmetic) {
    throw SpecError("synth spec: only arithmetic datasets can be synthesized (got " + dataset + ")");
  }
  if (answer_space) {
    if (es.answer_kind != structure::AnswerKind::option_letter) {
      throw SpecError("synth spec: answer_space needs an option-letter dataset such as aqua");
    }
    if (answer_space->size() < 2) throw SpecError("synth spec: answer_space needs at least two options");
    std::set<std::string> seen;
    for (const auto& o : *answer_space) {
      const auto c = projection::AnswerOptions::builtin().canonical(o);
      if (c.size() != 1 || c[0] < 'a' || c[0] > 'e') throw SpecError("synth spec: answer_space labels must be a..e");
      if (!seen.insert(c).second) throw SpecError("synth spec: answer_space labels must be distinct");
    }
  } else if (es.answer_kind != structure::AnswerKind::numeric) {
    throw SpecError("synth spec: dataset " + dataset + " needs an answer_space");
  }

  const int64_t adherent = round_half_up(planted_adherent_fraction * double(num_records));
  if (adherent > 0 || !answer_space) {
    if (!has_category(*this, 3)) {
      throw SpecError("synth spec: planted number occurrences are required to carry answers and new entities");
    }
  }
  if (has_category(*this, 3)) {
    const auto c = class_counts(planted_imitation.at("number"), occurrences_per_category);
    const int question_side = c.n[kBoth] + c.n[kQuestionOnly];
    const int fresh = c.n[kPromptOnly] + c.n[kNeither];
    // without an answer space the last number is the answer; it comes from the
    // question side when there is one, and the rest must still hold a fresh number
    const int needed = answer_space ? 1 : (question_side > 0 ? 1 : 2);
    if (adherent > 0 && fresh < needed) {
      throw SpecError("synth spec: number proportions leave no number outside the question for adherent records");
    }
  }
  if (answer_space && planted_cot_accuracy) {
    if (round_half_up(*planted_cot_accuracy * double(num_records)) > adherent) {
      throw SpecError("synth spec: with an answer space only adherent records can be answered");
    }
  }
}

// ---------------------------------------------------------------- truth

std::string GroundTruth::to_json() const {
  nlohmann::ordered_json j;
  j["num_records"] = num_records;
  j["cot_layer_means"] = cot_layer_means;
  j["standard_layer_means"] = standard_layer_means;
  j["layer_diff"] = layer_diff;
  j["adherent_count"] = adherent_count;
  nlohmann::ordered_json im = nlohmann::ordered_json::object();
  for (const auto& [cat, t] : imitation) {
    im[cat] = {{"occurrences", t.occurrences},
               {"matched_prompt", t.matched_prompt},
               {"matched_question", t.matched_question},
               {"proportion_prompt", t.proportion_prompt()},
               {"proportion_question", t.proportion_question()}};
  }
  j["imitation"] = im;
  j["imitation_tolerance"] = imitation_tolerance;
  j["cot_accuracy"] = cot_accuracy ? nlohmann::ordered_json(*cot_accuracy) : nlohmann::ordered_json(nullptr);
  j["standard_accuracy"] =
      standard_accuracy ? nlohmann::ordered_json(*standard_accuracy) : nlohmann::ordered_json(nullptr);
  return j.dump(2) + "\n";
}

// ---------------------------------------------------------------- generator

namespace {

std::vector<bool> choose(int64_t n, int64_t k, Rng& rng) {
  std::vector<int64_t> idx(static_cast<size_t>(n));
  for (int64_t i = 0; i < n; ++i) idx[size_t(i)] = i;
  rng.shuffle(idx);
  std::vector<bool> out(size_t(n), false);
  for (int64_t i = 0; i < k; ++i) out[size_t(idx[size_t(i)])] = true;
  return out;
}

std::string forms_text(Class a, Class b) {
  std::string out;
  for (int c = 0; c < 4; ++c) {
    out += std::string(" ") + kForms[size_t(c)][a] + " " + kForms[size_t(c)][b];
  }
  return out;
}

}  // namespace

Generator::Generator(SynthSpec spec) : spec_(std::move(spec)) {
  spec_.check();
  if (spec_.prompt_source_dataset.empty()) spec_.prompt_source_dataset = spec_.dataset;
  const int64_t n = spec_.num_records;
  const uint32_t T = spec_.num_steps;

  for (const char* w : kFiller) {
    const auto& lex = lexicon::TestPointLexicon::builtin();
    if (lex.is_number(w) || structure::canonical_number(w) != w) throw std::logic_error("bad filler word");
  }

  truth_.num_records = n;
  for (uint32_t l = 0; l < spec_.num_layers; ++l) {
    truth_.cot_layer_means.push_back(double(round_half_up(spec_.planted_cot_means[l] * T)) / T);
    truth_.standard_layer_means.push_back(double(round_half_up(spec_.planted_standard_means[l] * T)) / T);
    truth_.layer_diff.push_back(truth_.cot_layer_means[l] - truth_.standard_layer_means[l]);
  }
  truth_.adherent_count = round_half_up(spec_.planted_adherent_fraction * double(n));
  const int k = spec_.occurrences_per_category;
  for (const auto& [cat, p] : spec_.planted_imitation) {
    const auto c = class_counts(p, k);
    truth_.imitation[cat] = {k, c.n[kBoth] + c.n[kPromptOnly], c.n[kBoth] + c.n[kQuestionOnly]};
  }
  truth_.imitation_tolerance = spec_.planted_imitation.empty() ? 0.0 : 1.0 / (2.0 * k);

  Rng rng(spec_.rng_seed, kSelect, 0);
  adherent_ = choose(n, truth_.adherent_count, rng);
  if (spec_.planted_cot_accuracy) {
    const int64_t want = round_half_up(*spec_.planted_cot_accuracy * double(n));
    if (spec_.answer_space) {
      // only adherent records carry an answer: pick among them
      std::vector<int64_t> pool;
      for (int64_t i = 0; i < n; ++i) {
        if (adherent_[size_t(i)]) pool.push_back(i);
      }
      rng.shuffle(pool);
      cot_correct_.assign(size_t(n), false);
      for (int64_t i = 0; i < want; ++i) cot_correct_[size_t(pool[size_t(i)])] = true;
    } else {
      cot_correct_ = choose(n, want, rng);
    }
    truth_.cot_accuracy = n ? double(want) / double(n) : 0.0;
  }
  if (spec_.planted_standard_accuracy) {
    const int64_t want = round_half_up(*spec_.planted_standard_accuracy * double(n));
    standard_correct_ = choose(n, want, rng);
    truth_.standard_accuracy = n ? double(want) / double(n) : 0.0;
  }

  const std::string prompt_forms = forms_text(kBoth, kPromptOnly);
  cot_prompt_ = "Q: Blen" + prompt_forms + " quix?\nA: Zorb " + kForms[3][kPromptOnly] + " trop " +
                kForms[3][kBoth] + ". The answer is " + kForms[3][kPromptOnly] + ".\n\n";
  standard_prompt_ = "Q: Blen" + prompt_forms + " quix?\nA: The answer is " + kForms[3][kPromptOnly] + ".\n\n";
  question_ = "Zorb" + forms_text(kBoth, kQuestionOnly) + " quix?";
}

std::string Generator::id(int64_t index) const {
  std::string digits = std::to_string(index);
  const size_t width = std::max<size_t>(6, std::to_string(std::max<int64_t>(spec_.num_records - 1, 0)).size());
  return "r" + std::string(width > digits.size() ? width - digits.size() : 0, '0') + digits;
}

RunManifest Generator::manifest(PromptKind kind) const {
  RunManifest m;
  m.model = spec_.model;
  m.dataset = spec_.dataset;
  m.prompt_kind = kind;
  m.prompt_source_dataset = spec_.prompt_source_dataset;
  m.created_at = spec_.created_at;
  return m;
}

ActivationProfile Generator::profile(const std::vector<double>& means, int64_t index, uint64_t stream) const {
  const uint32_t T = spec_.num_steps, L = spec_.num_layers, d1 = spec_.ffn_width;
  int64_t jitter = 0;
  const bool unpaired_last = (spec_.num_records % 2 == 1) && index == spec_.num_records - 1;
  if (!unpaired_last) jitter = index % 2 == 0 ? spec_.record_mean_jitter : -spec_.record_mean_jitter;

  Rng rng(spec_.rng_seed, stream, uint64_t(index));
  ActivationProfile p;
  p.num_steps = T;
  p.num_layers = L;
  p.ffn_width = d1;
  p.counts.assign(size_t(T) * L, 0);
  for (uint32_t l = 0; l < L; ++l) {
    const int64_t sum = round_half_up(means[l] * T) + jitter;
    const uint32_t base = uint32_t(sum / T), rem = uint32_t(sum % T);
    for (uint32_t t = 0; t < T; ++t) p.counts[size_t(t) * L + l] = base + (t < rem ? 1 : 0);
    // zero-sum moves between random step pairs keep the layer sum fixed
    for (uint32_t m = 0; m < T; ++m) {
      const uint32_t a = uint32_t(rng.below(T)), b = uint32_t(rng.below(T));
      uint32_t& ca = p.counts[size_t(a) * L + l];
      uint32_t& cb = p.counts[size_t(b) * L + l];
      if (a == b) continue;
      const uint32_t room = std::min(ca, d1 - cb);
      if (room == 0) continue;
      const uint32_t delta = uint32_t(rng.below(uint64_t(std::min<uint32_t>(room, 1 + d1 / 8)) + 1));
      ca -= delta;
      cb += delta;
    }
  }
  return p;
}

namespace {

struct TextBuilder {
  std::vector<std::string> tokens;
  void word(const std::string& w) { tokens.push_back(tokens.empty() ? w : " " + w); }
  void stop() { tokens.push_back("."); }
};

std::string option_token(const std::string& label) { return "(" + label + ")"; }

}  // namespace

TraceRecord Generator::cot(int64_t index) {
  Rng rng(spec_.rng_seed, kCot, uint64_t(index));
  const bool adherent = adherent_[size_t(index)];
  const int k = spec_.occurrences_per_category;

  struct Item {
    int category;
    int cls;
  };
  std::vector<Item> items;
  std::optional<Item> answer_number;
  for (int c = 0; c < 4; ++c) {
    if (!has_category(spec_, c)) continue;
    const auto counts = class_counts(spec_.planted_imitation.at(kCategoryNames[size_t(c)]), k);
    for (int cls = 0; cls < 4; ++cls) {
      for (int i = 0; i < counts.n[size_t(cls)]; ++i) items.push_back({c, cls});
    }
  }
  rng.shuffle(items);

  if (!spec_.answer_space && has_category(spec_, 3)) {
    // the answer number: question side first, else any number
    auto pick = std::find_if(items.begin(), items.end(),
                             [](const Item& it) { return it.category == 3 && (it.cls == kBoth || it.cls == kQuestionOnly); });
    if (pick == items.end()) pick = std::find_if(items.begin(), items.end(), [](const Item& it) { return it.category == 3; });
    answer_number = *pick;
    items.erase(pick);
  }
  if (adherent) {
    // a fresh number must appear before the answer statement; move one to the front
    auto fresh = std::find_if(items.begin(), items.end(), [](const Item& it) {
      return it.category == 3 && (it.cls == kPromptOnly || it.cls == kNeither);
    });
    if (fresh != items.end()) std::rotate(items.begin(), fresh, fresh + 1);
  }

  TextBuilder tb;
  auto filler = [&] { return std::string(kFiller[rng.below(kFiller.size())]); };
  const size_t per_sentence = 3;
  for (size_t i = 0; i < items.size(); i += per_sentence) {
    tb.word(capitalize(filler()));
    for (size_t j = i; j < std::min(items.size(), i + per_sentence); ++j) {
      tb.word(kForms[size_t(items[j].category)][size_t(items[j].cls)]);
      tb.word(filler());
    }
    tb.stop();
  }

  std::string predicted;
  if (spec_.answer_space) predicted = (*spec_.answer_space)[rng.below(spec_.answer_space->size())];
  else if (answer_number) predicted = kForms[3][size_t(answer_number->cls)];

  size_t answer_step = SIZE_MAX;
  if (adherent) {
    tb.word("The");
    tb.word("answer");
    tb.word("is");
    answer_step = tb.tokens.size();
    tb.word(spec_.answer_space ? option_token(predicted) : predicted);
    tb.stop();
  } else if (!predicted.empty() && !spec_.answer_space) {
    tb.word(capitalize(filler()));
    tb.word(predicted);
    tb.stop();
  }
  if (tb.tokens.empty()) {
    tb.word(capitalize(filler()));
    tb.stop();
  }

  TraceRecord r;
  r.id = id(index);
  r.dataset = spec_.dataset;
  r.prompt_kind = PromptKind::cot;
  r.prompt_source_dataset = spec_.prompt_source_dataset;
  r.model = spec_.model;
  r.prompt_text = cot_prompt_;
  r.question_text = question_;
  r.generated_tokens = std::move(tb.tokens);
  r.token_probs.resize(r.generated_tokens.size());
  for (auto& p : r.token_probs) p = 0.3 + 0.7 * rng.unit();

  const bool correct = cot_correct_.empty() ? true : bool(cot_correct_[size_t(index)]);
  if (spec_.answer_space) {
    r.answer_space = spec_.answer_space;
    const auto& opts = *spec_.answer_space;
    if (correct || predicted.empty()) r.gold_answer = option_token(predicted.empty() ? opts[0] : predicted);
    else r.gold_answer = option_token(opts[(std::find(opts.begin(), opts.end(), predicted) - opts.begin() + 1) % long(opts.size())]);
  } else {
    r.gold_answer = correct ? predicted : "999999";
  }

  if (spec_.answer_space && answer_step != SIZE_MAX) {
    std::vector<TopkStep> topk(r.generated_tokens.size());
    std::vector<double> w(spec_.answer_space->size());
    double total = 0.0;
    for (auto& x : w) total += (x = 0.05 + rng.unit());
    for (auto& x : w) x = 0.95 * x / total;
    std::sort(w.begin(), w.end(), std::greater<>());
    auto& step = topk[answer_step];
    step.tokens.push_back(" " + option_token(predicted));
    step.probs.push_back(w[0]);
    size_t wi = 1;
    for (const auto& o : *spec_.answer_space) {
      if (o == predicted) continue;
      step.tokens.push_back(" " + option_token(o));
      step.probs.push_back(w[wi++]);
    }
    r.token_probs[answer_step] = w[0];
    r.topk = std::move(topk);
  }
  if (spec_.activations) r.activations = profile(spec_.planted_cot_means, index, kCotActs);
  return r;
}

TraceRecord Generator::standard(int64_t index) {
  Rng rng(spec_.rng_seed, kStandard, uint64_t(index));
  TraceRecord r;
  r.id = id(index);
  r.dataset = spec_.dataset;
  r.prompt_kind = PromptKind::standard;
  r.prompt_source_dataset = spec_.prompt_source_dataset;
  r.model = spec_.model;
  r.prompt_text = standard_prompt_;
  r.question_text = question_;

  std::string predicted;
  if (spec_.answer_space) {
    predicted = (*spec_.answer_space)[rng.below(spec_.answer_space->size())];
  } else {
    predicted = kForms[3][kQuestionOnly];
  }
  TextBuilder tb;
  tb.word("The");
  tb.word("answer");
  tb.word("is");
  const size_t answer_step = tb.tokens.size();
  tb.word(spec_.answer_space ? option_token(predicted) : predicted);
  tb.stop();
  r.generated_tokens = std::move(tb.tokens);
  r.token_probs.resize(r.generated_tokens.size());
  for (auto& p : r.token_probs) p = 0.3 + 0.7 * rng.unit();

  const bool correct = standard_correct_.empty() ? true : bool(standard_correct_[size_t(index)]);
  if (spec_.answer_space) {
    r.answer_space = spec_.answer_space;
    const auto& opts = *spec_.answer_space;
    const auto pos = size_t(std::find(opts.begin(), opts.end(), predicted) - opts.begin());
    r.gold_answer = option_token(correct ? predicted : opts[(pos + 1) % opts.size()]);
    std::vector<TopkStep> topk(r.generated_tokens.size());
    std::vector<double> w(opts.size());
    double total = 0.0;
    for (auto& x : w) total += (x = 0.05 + rng.unit());
    for (auto& x : w) x = 0.95 * x / total;
    std::sort(w.begin(), w.end(), std::greater<>());
    auto& step = topk[answer_step];
    step.tokens.push_back(" " + option_token(predicted));
    step.probs.push_back(w[0]);
    size_t wi = 1;
    for (const auto& o : opts) {
      if (o == predicted) continue;
      step.tokens.push_back(" " + option_token(o));
      step.probs.push_back(w[wi++]);
    }
    r.token_probs[answer_step] = w[0];
    r.topk = std::move(topk);
  } else {
    r.gold_answer = correct ? predicted : "999999";
  }
  if (spec_.activations) r.activations = profile(spec_.planted_standard_means, index, kStdActs);
  return r;
}

SynthOutput synth_traces(const SynthSpec& spec, const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  Generator gen(spec);
  SynthOutput out;
  out.cot_trace = out_dir / "cot.trc";
  out.standard_trace = out_dir / "std.trc";
  out.ground_truth = out_dir / "ground_truth.json";

  int64_t i = 0;
  write_trace_stream(
      gen.manifest(PromptKind::cot),
      [&]() -> std::optional<TraceRecord> {
        if (i >= spec.num_records) return std::nullopt;
        return gen.cot(i++);
      },
      out.cot_trace);
  i = 0;
  write_trace_stream(
      gen.manifest(PromptKind::standard),
      [&]() -> std::optional<TraceRecord> {
        if (i >= spec.num_records) return std::nullopt;
        return gen.standard(i++);
      },
      out.standard_trace);
  std::ofstream gt(out.ground_truth, std::ios::binary | std::ios::trunc);
  gt << gen.truth().to_json();
  if (!gt) throw DataError("cannot write " + out.ground_truth.string());
  out.truth = gen.truth();
  return out;
}

}  // namespace cotflow::synth
