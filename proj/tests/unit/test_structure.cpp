// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The cotflow Authors

#include <doctest.h>

#include <random>

#include "cotflow/structure.hpp"
#include "helpers.hpp"

using namespace cotflow;
using namespace cotflow::structure;

namespace {

const EntitySpec& spec(const char* name) { return EntitySpecs::builtin().for_dataset(name); }

using S = std::set<std::string>;

const char* kMaybelle =
    "The coin was flipped by Maybelle. So the coin was flipped 1 time, which is an odd number. The coin started "
    "heads up, so after an odd number of flips, it will be tails up. So the answer is No.";

const char* kTreesQ =
    "There are 15 trees in the grove. Grove workers will plant trees in the grove today. After they are done, there "
    "will be 21 trees. How many trees did the grove workers plant today?";
const char* kTreesCot =
    "There are 15 trees originally. Then there were 21 trees after some more were planted. So there must have been "
    "21 - 15 = 6. So the answer is 6.";

}  // namespace

TEST_CASE("dataset lookup") {
  CHECK(spec("GSM8K").dataset == "gsm8k");
  CHECK(spec("Coin Flip").domain == Domain::coin_flip);
  CHECK(spec("aqua-rat").answer_kind == AnswerKind::option_letter);
  CHECK(spec("last-letter-concat").domain == Domain::last_letter);
  CHECK_THROWS_AS(spec("imagenet"), DataError);
}

TEST_CASE("entity spec config validation") {
  const auto specs = EntitySpecs::from_json(R"({"defaults":{},"datasets":{"toy":{"domain":"arithmetic"}}})");
  CHECK(specs.for_dataset("toy").verb_threshold == 4);
  CHECK_THROWS_AS(EntitySpecs::from_json(R"({"datasets":{"toy":{"domian":"arithmetic"}}})"), DataError);
  CHECK_THROWS_AS(EntitySpecs::from_json(R"({"datasets":{"toy":{"domain":"chemistry"}}})"), DataError);
}

TEST_CASE("canonical numbers") {
  CHECK(canonical_number("5") == "5");
  CHECK(canonical_number("5.0") == "5");
  CHECK(canonical_number("005") == "5");
  CHECK(canonical_number("5.50") == "5.5");
  CHECK(canonical_number("1,000") == "1000");
  CHECK(canonical_number("-0.0") == "0");
  CHECK(canonical_number("-3") == "-3");
}

TEST_CASE("entity extraction") {
  CHECK(extract_entities("If there are 3 cars in the parking lot and 2 more cars arrive, how many cars are in the "
                         "parking lot?",
                         spec("gsm8k"))
            .values() == S{"3", "2"});
  CHECK(extract_entities("Jane was born on 06/01/1943. Her flight was delayed by one day.", spec("date")).values() ==
        S{"06/01/1943", "1"});
  for (const auto& s : EntitySpecs::builtin().all()) CHECK(extract_entities("", s).empty());
  CHECK(extract_entities("Take the last letters of \"Elon Musk\".", spec("last_letter")).values() == S{"elon", "musk"});
  CHECK(extract_entities("A coin is heads up. Ka flips the coin.", spec("coin_flip")).values() == S{"ka"});
}

TEST_CASE("final answer detection") {
  CHECK(detect_final_answer("There are 3 cars. 2 more arrive. 3 + 2 = 5. So the answer is 5.").found);
  CHECK(!detect_final_answer("The answer is 6, I think. Let me reconsider.").found);
  CHECK(!detect_final_answer("").found);
  const auto fa = detect_final_answer("So 5. The answer is 5.");
  CHECK(fa.found);
  CHECK(fa.span.begin == 6);
}

TEST_CASE("reasoning steps, entity path") {
  const auto s = spec("gsm8k");
  const auto inputs = extract_entities("3 cars and 2 more", s);
  const auto ev = detect_reasoning_steps("3 + 2 = 5. So the answer is 5.", inputs, s);
  CHECK(ev.reasoning);
  CHECK(ev.new_entities == std::vector<std::string>{"5"});

  const auto inputs2 = extract_entities("15 trees, then 21 trees", s);
  CHECK(!detect_reasoning_steps("The answer is 6.", inputs2, s).reasoning);
  // without the answer-statement exclusion the final answer itself counts
  const auto raw = detect_reasoning_steps("The answer is 6.", inputs2, s, false);
  CHECK(raw.reasoning);
  CHECK(raw.new_entities == std::vector<std::string>{"6"});
}

TEST_CASE("reasoning steps, verb path on the Maybelle answer") {
  const auto s = spec("coin_flip");
  const auto ev = detect_reasoning_steps(kMaybelle, {}, s);
  REQUIRE(ev.verb_count);
  CHECK(*ev.verb_count == 5);
  CHECK(ev.reasoning);
  CHECK(*detect_reasoning_steps(kMaybelle, {}, s, false).verb_count == 6);
  CHECK(count_process_verbs("It is what it was, be it flips.", s) == 4);
}

TEST_CASE("adherence") {
  const auto s = spec("gsm8k");
  CHECK(adherence(kTreesQ, "", kTreesCot, s).adherent);
  CHECK(!adherence(kTreesQ, "", "The answer is 6.", s).adherent);
  const auto no_close = adherence(kTreesQ, "", "There are 15 trees. 21 - 15 = 6. Done.", s);
  CHECK(no_close.stage2.reasoning);
  CHECK(!no_close.stage3.found);
  CHECK(!no_close.adherent);
  CHECK_THROWS_AS(adherence("", "", kTreesCot, s), std::invalid_argument);

  std::vector<AdherenceVerdict> vs;
  CHECK(imitation_count(vs) == 0);
  for (int i = 0; i < 10; ++i) vs.push_back(adherence(kTreesQ, "", i % 2 ? kTreesCot : "The answer is 6.", s));
  CHECK(imitation_count(vs) == 5);
}

TEST_CASE("answer choices are not stage-1 entities") {
  const auto s = spec("aqua");
  const std::string q = "John found that the average of 15 numbers is 40. If 10 is added to each number then the "
                        "mean of the numbers is? Answer Choices: (a) 50 (b) 45 (c) 65 (d) 78 (e) 64";
  CHECK(extract_entities(stage1_text(q, s), s).values() == S{"15", "40", "10"});
  CHECK(adherence(q, "", "If 10 is added to each number, then the mean of the numbers also increases by 10. So the "
                         "new mean would be 50. The answer is (a).",
                  s)
            .adherent);
}

TEST_CASE("Pearson correlation") {
  std::vector<CorrelationPoint> line, neg;
  for (int i = 0; i < 5; ++i) {
    line.push_back({double(i), 2.0 * i + 1.0});
    neg.push_back({double(i), -double(i)});
  }
  const auto a = adherence_accuracy_correlation(line);
  CHECK(a.r == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(a.slope == doctest::Approx(2.0));
  CHECK(a.intercept == doctest::Approx(1.0));
  CHECK(adherence_accuracy_correlation(neg).r == doctest::Approx(-1.0).epsilon(1e-12));
  // mpmath oracle: 0.6546536707079771438
  const auto three = adherence_accuracy_correlation({{1, 0.2}, {2, 0.5}, {3, 0.4}});
  CHECK(std::abs(three.r - 0.6546536707079771) < 1e-12);
  CHECK(three.n == 3);
  CHECK_THROWS_AS(adherence_accuracy_correlation({{1, 0.2}}), std::domain_error);
  CHECK_THROWS_AS(adherence_accuracy_correlation({{1, 0.2}, {1, 0.5}, {1, 0.4}}), std::domain_error);
  CHECK_THROWS_AS(adherence_accuracy_correlation({{1, 0.2}, {2, 0.2}}), std::domain_error);
}

// ---------------------------------------------------------------- properties

namespace {

std::string random_sentence_text(std::mt19937_64& rng, bool close) {
  static const std::vector<std::string> words{"There", "are", "cars", "12", "3.50", "1,000", "then", "Tom", "Paris",
                                              "hockey", "one", "two", "the", "trees", "was", "is", "flips", "=",
                                              "+", "06/01/1943"};
  std::string s;
  const int sentences = 1 + int(rng() % 4);
  for (int k = 0; k < sentences; ++k) {
    const int n = 1 + int(rng() % 8);
    for (int i = 0; i < n; ++i) s += (i ? " " : "") + words[rng() % words.size()];
    s += ". ";
  }
  if (close) s += "So the answer is " + std::to_string(rng() % 100) + ".";
  return s;
}

}  // namespace

TEST_CASE("property: adherent implies a terminal answer statement") {
  std::mt19937_64 rng(5);
  for (const auto& s : EntitySpecs::builtin().all()) {
    for (int iter = 0; iter < 200; ++iter) {
      const auto g = random_sentence_text(rng, rng() % 2);
      const auto v = adherence(random_sentence_text(rng, false), "", g, s);
      if (v.adherent) {
        REQUIRE(v.stage3.found);
        REQUIRE(v.stage2.reasoning);
      }
      REQUIRE(v.stage3.found == detect_final_answer(g).found);
    }
  }
}

TEST_CASE("property: rendering entities and re-extracting gives the same set") {
  std::mt19937_64 rng(6);
  for (const char* name : {"gsm8k", "date", "coin_flip", "sports", "last_letter"}) {
    const auto& s = spec(name);
    for (int iter = 0; iter < 200; ++iter) {
      std::string t = random_sentence_text(rng, false);
      if (s.domain == Domain::last_letter) t = "Take the last letters of \"Ann Bo\" and \"cy\".";
      const auto e = extract_entities(t, s);
      const auto again = extract_entities(render_entities(e, s), s);
      REQUIRE(again.values() == e.values());
    }
  }
}

TEST_CASE("property: correlation is invariant under positive affine maps") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int iter = 0; iter < 200; ++iter) {
    std::vector<CorrelationPoint> p, q, flip;
    const double a = 0.1 + 10 * u(rng), b = u(rng) * 100 - 50, c = 0.1 + 5 * u(rng);
    const int n = 3 + int(rng() % 10);
    for (int i = 0; i < n; ++i) {
      const double x = double(rng() % 50), y = u(rng);
      p.push_back({x, y});
      q.push_back({a * x + b, c * y});
      flip.push_back({-x, y});
    }
    double r;
    try {
      r = adherence_accuracy_correlation(p).r;
    } catch (const std::domain_error&) {
      continue;
    }
    REQUIRE(adherence_accuracy_correlation(q).r == doctest::Approx(r).epsilon(1e-9));
    REQUIRE(adherence_accuracy_correlation(flip).r == doctest::Approx(-r).epsilon(1e-9));
    REQUIRE(std::abs(r) <= 1.0);
  }
}
