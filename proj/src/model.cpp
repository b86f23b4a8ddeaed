// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The cotflow Authors

#include "cotflow/model.hpp"

#include <cmath>
#include <cstdio>
#include <set>

namespace cotflow {

std::string_view to_string(PromptKind kind) { return kind == PromptKind::cot ? "cot" : "standard"; }

PromptKind parse_prompt_kind(std::string_view text) {
  if (text == "cot") return PromptKind::cot;
  if (text == "standard") return PromptKind::standard;
  throw std::invalid_argument("unknown prompt_kind '" + std::string(text) + "'");
}

std::string TraceRecord::generated_text() const {
  size_t total = 0;
  for (const auto& t : generated_tokens) total += t.size();
  std::string out;
  out.reserve(total);
  for (const auto& t : generated_tokens) out += t;
  return out;
}

namespace {

std::string index_path(std::string_view base, size_t i) {
  return std::string(base) + "[" + std::to_string(i) + "]";
}

bool is_probability(double p) { return std::isfinite(p) && p >= 0.0 && p <= 1.0; }

void check_probability(ValidationReport& out, const std::string& path, double p) {
  if (std::isnan(p)) {
    out.push_back({path, path + " is NaN"});
  } else if (p > 1.0) {
    out.push_back({path, path + " > 1"});
  } else if (p < 0.0) {
    out.push_back({path, path + " < 0"});
  }
}

}  // namespace

ValidationReport validate_profile(const ActivationProfile& profile, std::string_view path) {
  ValidationReport out;
  const std::string base(path);
  if (profile.num_layers == 0) out.push_back({base + ".num_layers", "num_layers must be positive"});
  if (profile.num_steps == 0) out.push_back({base + ".num_steps", "num_steps must be positive"});
  if (profile.ffn_width == 0) out.push_back({base + ".ffn_width", "ffn_width must be positive"});
  const size_t expected = size_t(profile.num_steps) * profile.num_layers;
  if (profile.counts.size() != expected) {
    out.push_back({base + ".counts", "counts has " + std::to_string(profile.counts.size()) +
                                         " entries, expected num_steps x num_layers = " +
                                         std::to_string(expected)});
    return out;
  }
  for (uint32_t t = 0; t < profile.num_steps; ++t) {
    for (uint32_t l = 0; l < profile.num_layers; ++l) {
      if (profile.at(t, l) > profile.ffn_width) {
        out.push_back({base + ".counts[" + std::to_string(t) + "][" + std::to_string(l) + "]",
                       "count exceeds ffn_width"});
      }
    }
  }
  return out;
}

ValidationReport validate_record(const TraceRecord& record) {
  ValidationReport out;
  if (record.id.empty()) out.push_back({"id", "id must be non-empty"});
  if (record.dataset.empty()) out.push_back({"dataset", "dataset must be non-empty"});
  if (record.token_probs.size() != record.generated_tokens.size()) {
    out.push_back({"token_probs", "len(token_probs) = " + std::to_string(record.token_probs.size()) +
                                      " but len(generated_tokens) = " +
                                      std::to_string(record.generated_tokens.size())});
  }
  for (size_t i = 0; i < record.token_probs.size(); ++i) {
    check_probability(out, index_path("token_probs", i), record.token_probs[i]);
  }

  if (record.topk) {
    const auto& steps = *record.topk;
    if (steps.size() != record.generated_tokens.size()) {
      out.push_back({"topk", "topk has " + std::to_string(steps.size()) + " steps but " +
                                 std::to_string(record.generated_tokens.size()) + " tokens were generated"});
    }
    for (size_t s = 0; s < steps.size(); ++s) {
      const auto& step = steps[s];
      const std::string base = index_path("topk", s);
      if (step.tokens.size() != step.probs.size()) {
        out.push_back({base, "tokens and probs differ in length"});
      }
      double sum = 0.0;
      for (size_t j = 0; j < step.probs.size(); ++j) {
        const double p = step.probs[j];
        check_probability(out, base + ".probs[" + std::to_string(j) + "]", p);
        if (is_probability(p)) sum += p;
        if (j > 0 && p > step.probs[j - 1]) {
          out.push_back({base + ".probs[" + std::to_string(j) + "]", "top-k probs must be non-increasing"});
        }
      }
      if (sum > 1.0 + 1e-6) out.push_back({base + ".probs", "top-k probs sum to more than 1"});
    }
  }

  if (record.answer_space) {
    std::set<std::string> seen;
    for (size_t i = 0; i < record.answer_space->size(); ++i) {
      const auto& label = (*record.answer_space)[i];
      if (label.empty()) out.push_back({index_path("answer_space", i), "answer_space label is empty"});
      if (!seen.insert(label).second) {
        out.push_back({index_path("answer_space", i), "duplicate answer_space label '" + label + "'"});
      }
    }
  }

  if (record.decode.max_new_tokens < 1) out.push_back({"decode_params.max_new_tokens", "max_new_tokens must be >= 1"});
  if (record.decode.shots < 0) out.push_back({"decode_params.shots", "shots must be >= 0"});

  if (record.activations) {
    auto profile_report = validate_profile(*record.activations);
    out.insert(out.end(), profile_report.begin(), profile_report.end());
  }
  return out;
}

ValidationReport validate_manifest(const RunManifest& manifest) {
  ValidationReport out;
  if (manifest.record_count < 0) out.push_back({"record_count", "record_count must be >= 0"});
  if (manifest.accuracy && !is_probability(*manifest.accuracy)) {
    out.push_back({"accuracy", "accuracy must lie in [0, 1]"});
  }
  return out;
}

std::string Improvement::render() const {
  if (infinite) return "+inf";
  const double rounded = std::round(percent * 100.0) / 100.0;
  if (rounded == 0.0) return "0.00%";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%+.2f%%", percent);
  return buf;
}

Improvement relative_improvement(double standard_acc, double cot_acc) {
  if (!is_probability(standard_acc) || !is_probability(cot_acc)) {
    throw std::invalid_argument("accuracies must lie in [0, 1]");
  }
  if (standard_acc == 0.0) {
    if (cot_acc == 0.0) throw std::domain_error("relative improvement undefined: both accuracies are zero");
    return {true, 0.0};
  }
  return {false, 100.0 * (cot_acc - standard_acc) / standard_acc};
}

namespace {

struct Decimal {
  double value = 0.0;
  int decimals = 0;
};

Decimal parse_decimal(std::string_view text) {
  std::string s;
  for (char c : text) {
    if (c == '%' || c == ' ' || c == '$') continue;
    s.push_back(c);
  }
  if (s.empty()) throw std::invalid_argument("empty decimal");
  size_t pos = 0;
  Decimal d;
  try {
    d.value = std::stod(s, &pos);
  } catch (const std::exception&) {
    throw std::invalid_argument("not a decimal: '" + std::string(text) + "'");
  }
  if (pos != s.size()) throw std::invalid_argument("not a decimal: '" + std::string(text) + "'");
  const auto dot = s.find('.');
  d.decimals = dot == std::string::npos ? 0 : int(s.size() - dot - 1);
  return d;
}

bool is_infinity_literal(std::string_view text) {
  return text.find("inf") != std::string_view::npos || text.find("∞") != std::string_view::npos;
}

}  // namespace

ImprovementAudit audit_improvement(std::string_view standard_acc, std::string_view cot_acc,
                                   std::string_view printed) {
  const Decimal standard = parse_decimal(standard_acc);
  const Decimal cot = parse_decimal(cot_acc);
  ImprovementAudit audit;
  audit.printed = std::string(printed);
  audit.recomputed = relative_improvement(standard.value, cot.value);

  const bool printed_inf = is_infinity_literal(printed);
  if (audit.recomputed.infinite || printed_inf) {
    audit.matches = audit.recomputed.infinite && printed_inf;
    audit.attainable = audit.matches;
    audit.attainable_low = audit.attainable_high = audit.recomputed.infinite ? INFINITY : audit.recomputed.percent;
    return audit;
  }

  const double half_std = 0.5 * std::pow(10.0, -standard.decimals);
  const double half_cot = 0.5 * std::pow(10.0, -cot.decimals);
  const double std_lo = std::max(standard.value - half_std, 1e-300);
  const double std_hi = std::min(standard.value + half_std, 1.0);
  const double cot_lo = std::max(cot.value - half_cot, 0.0);
  const double cot_hi = std::min(cot.value + half_cot, 1.0);
  // Increasing in cot, decreasing in standard.
  audit.attainable_low = 100.0 * (cot_lo - std_hi) / std_hi;
  audit.attainable_high = 100.0 * (cot_hi - std_lo) / std_lo;

  const Decimal shown = parse_decimal(printed);
  const double half_shown = 0.5 * std::pow(10.0, -shown.decimals);
  const double slack = 1e-9;
  audit.matches = std::fabs(audit.recomputed.percent - shown.value) <= half_shown + slack;
  audit.attainable = audit.attainable_high >= shown.value - half_shown - slack &&
                     audit.attainable_low <= shown.value + half_shown + slack;
  return audit;
}

}  // namespace cotflow
