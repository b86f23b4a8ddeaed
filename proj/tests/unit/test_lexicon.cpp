// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The cotflow Authors

#include <doctest.h>

#include <random>

#include "cotflow/lexicon.hpp"
#include "helpers.hpp"

using namespace cotflow;
using namespace cotflow::lexicon;

namespace {

std::vector<std::string> texts(const std::vector<Token>& ts) {
  std::vector<std::string> out;
  for (const auto& t : ts) out.push_back(t.text);
  return out;
}

std::vector<std::string> forms(const CategoryOccurrences& occ, Category c) {
  std::vector<std::string> out;
  for (const auto& o : occ[c]) out.push_back(o.form);
  return out;
}

using V = std::vector<std::string>;

}  // namespace

TEST_CASE("normalization") {
  CHECK(texts(normalize_text("3 + 2 = 5. So the answer is 5.")) == V{"3", "+", "2", "=", "5", "so", "the", "answer",
                                                                       "is", "5"});
  CHECK(normalize_text("").empty());
  CHECK(texts(normalize_text("20 km/hr × 2.5 hrs")) == V{"20", "km", "/", "hr", "*", "2.5", "hrs"});
  CHECK(texts(normalize_text("It costs -3, not 1,000.50!")) == V{"it", "costs", "-3", "not", "1,000.50"});
  CHECK(texts(normalize_text("21-15")) == V{"21", "-", "15"});
  CHECK(texts(normalize_text("Leah's sister")) == V{"leah", "'s", "sister"});
  CHECK(texts(normalize_text("3rd place")) == V{"3rd", "place"});
}

TEST_CASE("token spans point into the canonicalized text") {
  const std::string in = "Add 5 then add 3";
  const auto canon = text::canonicalize_symbols(in);
  for (const auto& t : normalize_text(in)) {
    CHECK(text::ascii_lower(canon.substr(t.span.begin, t.span.end - t.span.begin)) == t.text);
  }
}

TEST_CASE("test-point extraction") {
  const auto& lex = TestPointLexicon::builtin();
  auto occ = extract_test_points("originally 3 cars, then 2 arrive", lex);
  CHECK(forms(occ, Category::time) == V{"originally", "then"});
  CHECK(forms(occ, Category::number) == V{"3", "2"});
  CHECK(occ[Category::action].empty());
  CHECK(occ[Category::loc_peo].empty());

  CHECK(extract_test_points("xyzzy plugh", lex).total() == 0);

  occ = extract_test_points("add 5 then add 3", lex);
  CHECK(forms(occ, Category::action) == V{"add", "add"});
  CHECK(forms(occ, Category::number) == V{"5", "3"});
  CHECK(forms(occ, Category::time) == V{"then"});

  occ = extract_test_points("At the same time, five people", lex);
  CHECK(forms(occ, Category::time) == V{"at the same time"});
  CHECK(forms(occ, Category::number) == V{"five"});
}

TEST_CASE("imitation proportions on the worked example") {
  const auto& lex = TestPointLexicon::builtin();
  const std::string gen = "Then he had 12. So he gave 20 - 12 = 8. So the answer is 8.";
  const auto rep = imitation_proportions(gen, "then so after", "20 12", lex);
  // time occurrences: then, so, so; all three are prompt words
  CHECK(rep.at(Category::time, Source::prompt).generated == 3);
  CHECK(*rep.proportion(Category::time, Source::prompt) == 1.0);
  // number occurrences 12, 20, 12, 8, 8; the question holds 20 and 12
  CHECK(rep.at(Category::number, Source::question).generated == 5);
  CHECK(rep.at(Category::number, Source::question).matched == 3);
  CHECK(*rep.proportion(Category::number, Source::question) == doctest::Approx(0.6));
  // "-" and "=" are action occurrences, absent from the question
  CHECK(rep.at(Category::action, Source::question).generated == 2);
  CHECK(*rep.proportion(Category::action, Source::question) == 0.0);
  CHECK(rep.question_occurrences[size_t(Category::number)] == 2);
}

TEST_CASE("undefined proportions") {
  const auto& lex = TestPointLexicon::builtin();
  const auto rep = imitation_proportions("no digits here", "1 2", "3", lex);
  CHECK(!rep.proportion(Category::number, Source::prompt));
  CHECK(!rep.proportion(Category::number, Source::question));
}

TEST_CASE("lexicon config validation") {
  const std::string ok = R"({"time":["then"],"action":["add"],"loc_peo":["site"],"number_pattern":"[0-9]+","number_words":["one"]})";
  const auto lex = TestPointLexicon::from_json(ok);
  CHECK(lex.words(Category::time) == V{"then"});
  CHECK(lex.is_number("42"));
  CHECK(lex.is_number("one"));
  CHECK(!lex.is_number("4.2"));
  CHECK_THROWS_AS(TestPointLexicon::from_json(R"({"time":[]})"), DataError);
  CHECK_THROWS_AS(TestPointLexicon::from_json(
                      R"({"time":["Then"],"action":["add"],"loc_peo":["x"],"number_pattern":"[0-9]+","number_words":[]})"),
                  DataError);
  CHECK_THROWS_AS(TestPointLexicon::from_json(
                      R"({"time":["a","a"],"action":["add"],"loc_peo":["x"],"number_pattern":"[0-9]+","number_words":[]})"),
                  DataError);
  CHECK_THROWS_AS(TestPointLexicon::from_json(
                      R"({"time":["a"],"action":["add"],"loc_peo":["x"],"number_pattern":"[0-9","number_words":[]})"),
                  DataError);
}

TEST_CASE("transfer matrix arrangement") {
  const auto& lex = TestPointLexicon::builtin();
  ImitationAggregate a, b, undefined_numbers;
  a.add(imitation_proportions("then 3 add", "then", "3", lex));
  b.add(imitation_proportions("so 4", "then", "4", lex));
  b.add(imitation_proportions("after 5", "after", "6", lex));
  undefined_numbers.add(imitation_proportions("then", "then", "1", lex));
  undefined_numbers.add(imitation_proportions("so", "then", "1", lex));

  const auto m = transfer_matrix({{"gsm8k", "gsm8k", a}, {"date", "gsm8k", b}});
  CHECK(m.size() == 2);
  // a single-record run equals that record's report
  const auto& one = m.at({"gsm8k", "gsm8k"});
  CHECK(*one.at(Category::time, Source::prompt).mean() == 1.0);
  CHECK(*one.at(Category::number, Source::question).mean() == 1.0);
  const auto& two = m.at({"date", "gsm8k"});
  CHECK(two.records() == 2);
  CHECK(*two.at(Category::number, Source::question).mean() == doctest::Approx(0.5));
  CHECK(*two.at(Category::time, Source::prompt).mean() == doctest::Approx(0.5));

  const auto u = transfer_matrix({{"gsm8k", "gsm8k", undefined_numbers}});
  const auto& cell = u.at({"gsm8k", "gsm8k"}).at(Category::number, Source::question);
  CHECK(!cell.mean());
  CHECK(cell.undefined == 2);

  // runs sharing a key merge
  const auto merged = transfer_matrix({{"x", "y", a}, {"x", "y", b}});
  CHECK(merged.size() == 1);
  CHECK(merged.at({"x", "y"}).records() == 3);
}

// ---------------------------------------------------------------- properties

namespace {

std::string random_text(std::mt19937_64& rng) {
  const auto& lex = TestPointLexicon::builtin();
  static const V fillers{"apple", "Blue", "ran", "12", "-7", "3.5", "1,200", "x", ",", ".", "?", "(", ")", "at",
                         "same", "time", "the"};
  std::string s;
  const int n = int(rng() % 30);
  for (int i = 0; i < n; ++i) {
    const auto pick = rng() % 5;
    const V* pool = pick == 0 ? &lex.time : pick == 1 ? &lex.action : pick == 2 ? &lex.loc_peo : &fillers;
    s += (*pool)[rng() % pool->size()];
    s += rng() % 4 ? " " : "";
  }
  return s;
}

}  // namespace

TEST_CASE("property: occurrences are disjoint and ordered") {
  std::mt19937_64 rng(1);
  const auto& lex = TestPointLexicon::builtin();
  for (int iter = 0; iter < 500; ++iter) {
    const auto t = random_text(rng);
    const auto occ = extract_test_points(t, lex);
    std::vector<std::pair<size_t, size_t>> ranges;
    for (auto c : kCategories) {
      for (const auto& o : occ[c]) {
        REQUIRE(o.token_begin < o.token_end);
        ranges.push_back({o.token_begin, o.token_end});
      }
    }
    std::sort(ranges.begin(), ranges.end());
    for (size_t i = 1; i < ranges.size(); ++i) REQUIRE(ranges[i - 1].second <= ranges[i].first);
  }
}

TEST_CASE("property: prompt-side proportions ignore the question and vice versa") {
  std::mt19937_64 rng(2);
  const auto& lex = TestPointLexicon::builtin();
  for (int iter = 0; iter < 300; ++iter) {
    const auto g = random_text(rng), p = random_text(rng), q1 = random_text(rng), q2 = random_text(rng);
    const auto a = imitation_proportions(g, p, q1, lex), b = imitation_proportions(g, p, q2, lex);
    const auto c = imitation_proportions(g, q1, q1, lex);
    for (auto cat : kCategories) {
      REQUIRE(a.proportion(cat, Source::prompt) == b.proportion(cat, Source::prompt));
      REQUIRE(a.proportion(cat, Source::question) == c.proportion(cat, Source::question));
      const auto pr = a.proportion(cat, Source::prompt);
      if (pr) REQUIRE((*pr >= 0.0 && *pr <= 1.0));
    }
  }
}

TEST_CASE("property: a generation equal to the prompt imitates it fully") {
  std::mt19937_64 rng(3);
  const auto& lex = TestPointLexicon::builtin();
  for (int iter = 0; iter < 300; ++iter) {
    const auto g = random_text(rng);
    const auto rep = imitation_proportions(g, g, "", lex);
    for (auto cat : kCategories) {
      if (auto p = rep.proportion(cat, Source::prompt)) REQUIRE(*p == 1.0);
    }
  }
}
