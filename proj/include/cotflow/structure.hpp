// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The cotflow Authors

#pragma once

/**
 * @file structure.hpp
 * @brief Reasoning-structure adherence.
 *
 * A generation adheres when it derives something new from the input
 * (new entities, or enough process verbs for tasks that produce few
 * entities) and closes with "the answer is" in its final sentence.
 *
 * The terminal answer statement itself never counts as reasoning evidence:
 * everything from its "the answer is" to the end of the text is removed
 * before stage 2 looks for new entities or counts verbs.
 */

#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "cotflow/model.hpp"
#include "cotflow/text.hpp"

namespace cotflow::structure {

enum class Domain { arithmetic, commonsense_general, date, coin_flip, last_letter };
std::string_view to_string(Domain d);
Domain parse_domain(std::string_view s);

enum class AnswerKind { numeric, option_letter, yes_no, date, free_text };
std::string_view to_string(AnswerKind k);
AnswerKind parse_answer_kind(std::string_view s);

enum class Stage1Source { question, question_and_prompt };

/// Per-dataset extraction rules and answer format.
struct EntitySpec {
  std::string dataset;
  Domain domain = Domain::arithmetic;
  AnswerKind answer_kind = AnswerKind::numeric;
  std::vector<std::string> process_verbs{"flips", "is", "was", "are", "be", "were"};
  int verb_threshold = 4;
  Stage1Source stage1_source = Stage1Source::question;
  /// Drop "Answer Choices: ..." from the input before stage 1.
  bool exclude_answer_choices = true;
  /// Commonsense only: lowercase non-stopword words of 3+ letters are entities.
  bool content_words = false;
  std::vector<std::string> name_words;
  std::vector<std::string> location_words;
  std::vector<std::string> time_words;
  std::vector<std::string> stopwords;
  std::vector<std::string> answer_space;

  /// Entity domains compare entity sets; the others count verbs.
  bool uses_verbs() const { return domain == Domain::coin_flip || domain == Domain::last_letter; }
};

/// Dataset table: shared defaults plus per-dataset overrides and aliases.
class EntitySpecs {
 public:
  static EntitySpecs from_json(std::string_view json_text);
  static EntitySpecs load(const std::string& path);
  static const EntitySpecs& builtin();

  /// Case-insensitive lookup by name or alias; throws DataError if unknown.
  const EntitySpec& for_dataset(std::string_view name) const;
  const std::vector<EntitySpec>& all() const { return specs_; }

 private:
  std::vector<EntitySpec> specs_;
  std::vector<std::pair<std::string, size_t>> names_;
};

struct Entity {
  std::string value;    // normalized
  std::string surface;  // as written
  text::Span span;
};

struct EntitySet {
  std::vector<Entity> entities;  // first occurrence of each value, in text order

  bool contains(std::string_view value) const;
  std::set<std::string> values() const;
  size_t size() const { return entities.size(); }
  bool empty() const { return entities.empty(); }
  void insert(Entity e);
};

/// "5", "5.0", "005" and "5.00" all become "5"; "1,000" becomes "1000".
std::string canonical_number(std::string_view literal);

EntitySet extract_entities(std::string_view text, const EntitySpec& spec);

/// A text that extract_entities maps back onto the same value set.
std::string render_entities(const EntitySet& set, const EntitySpec& spec);

/// Span from the final sentence's "the answer is" to the end of the text.
std::optional<text::Span> answer_statement_span(std::string_view generated);

struct FinalAnswer {
  bool found = false;
  text::Span span;  // the answer statement when found
};
FinalAnswer detect_final_answer(std::string_view generated);

struct ReasoningEvidence {
  bool reasoning = false;
  std::vector<std::string> new_entities;  // entity domains
  std::optional<int> verb_count;          // verb domains
};

/// exclude_answer_statement applies the answer-statement exclusion; it is on
/// for adherence and exposed for testing the raw counts.
ReasoningEvidence detect_reasoning_steps(std::string_view generated, const EntitySet& input_entities,
                                         const EntitySpec& spec, bool exclude_answer_statement = true);

int count_process_verbs(std::string_view text, const EntitySpec& spec);

struct AdherenceVerdict {
  EntitySet stage1_entities;
  ReasoningEvidence stage2;
  FinalAnswer stage3;
  bool adherent = false;
};

/// Input text for stage 1 after the answer-choices cut.
std::string stage1_text(std::string_view question, const EntitySpec& spec);

/// Throws std::invalid_argument if the record has no question text.
AdherenceVerdict adherence(const TraceRecord& record, const EntitySpec& spec);
AdherenceVerdict adherence(std::string_view question, std::string_view prompt, std::string_view generated,
                           const EntitySpec& spec);

size_t imitation_count(const std::vector<AdherenceVerdict>& verdicts);

struct CorrelationResult {
  double r = 0.0;
  double slope = 0.0;
  double intercept = 0.0;
  size_t n = 0;
};

struct CorrelationPoint {
  double imitation_count = 0.0;
  double accuracy = 0.0;
};

/// Pearson r with the least-squares line y = slope x + intercept. Throws
/// std::domain_error("undefined correlation") for n < 2 or zero variance.
CorrelationResult adherence_accuracy_correlation(const std::vector<CorrelationPoint>& points);

}  // namespace cotflow::structure
