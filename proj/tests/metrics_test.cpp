/*
 * Copyright 2026 The lrasr Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "lrasr/metrics.hpp"

#include <algorithm>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "edit_oracle.hpp"
#include "json.hpp"
#include "test_util.hpp"

namespace m = lrasr::metrics;
namespace tn = lrasr::textnorm;

namespace {

using lrasr::testing::brute_distance;

std::vector<int> random_seq(std::mt19937& rng, int alphabet, std::size_t max_len) {
  std::uniform_int_distribution<std::size_t> len(0, max_len);
  std::uniform_int_distribution<int> sym(0, alphabet - 1);
  std::vector<int> v(len(rng));
  for (auto& x : v) x = sym(rng);
  return v;
}

// Replays the op list against ref and checks it yields hyp.
void check_script(const std::vector<int>& ref, const std::vector<int>& hyp,
                  const m::Alignment& al) {
  std::vector<int> rebuilt;
  std::ptrdiff_t next_ref = 0, next_hyp = 0;
  for (const auto& op : al.ops) {
    switch (op.op) {
      case m::EditOp::kMatch:
        REQUIRE(ref[op.ref_index] == hyp[op.hyp_index]);
        [[fallthrough]];
      case m::EditOp::kSubstitute:
        REQUIRE(op.ref_index == next_ref++);
        REQUIRE(op.hyp_index == next_hyp++);
        if (op.op == m::EditOp::kSubstitute) REQUIRE(ref[op.ref_index] != hyp[op.hyp_index]);
        rebuilt.push_back(hyp[op.hyp_index]);
        break;
      case m::EditOp::kDelete:
        REQUIRE(op.ref_index == next_ref++);
        REQUIRE(op.hyp_index == -1);
        break;
      case m::EditOp::kInsert:
        REQUIRE(op.hyp_index == next_hyp++);
        REQUIRE(op.ref_index == -1);
        rebuilt.push_back(hyp[op.hyp_index]);
        break;
    }
  }
  CHECK(static_cast<std::size_t>(next_ref) == ref.size());
  CHECK(rebuilt == hyp);
}

}  // namespace

TEST_CASE("edit_distance examples") {
  const std::vector<std::string> abc{"a", "b", "c"}, axc{"a", "x", "c"}, ab{"a", "b"}, none;
  auto al = m::edit_distance(abc, abc);
  CHECK(al.distance() == 0);
  CHECK(al.matches == 3);
  al = m::edit_distance(abc, axc);
  CHECK(al.substitutions == 1);
  CHECK(al.distance() == brute_distance(abc, axc));
  al = m::edit_distance(ab, none);
  CHECK(al.deletions == 2);
  CHECK(al.distance() == 2);
  al = m::edit_distance(none, ab);
  CHECK(al.insertions == 2);
}

TEST_CASE("edit_distance tie-breaking prefers diagonal, then deletion, then insertion") {
  // ref [a,b], hyp [b,a]: cost 2 either as two substitutions or as D+I.
  const std::vector<int> ref{0, 1}, hyp{1, 0};
  const auto al = m::edit_distance(ref, hyp);
  CHECK(al.distance() == 2);
  CHECK(al.substitutions == 2);
  // ref [a], hyp [b, b]: the backtrace from the end takes a substitution,
  // then an insertion.
  const auto al2 = m::edit_distance(std::vector<int>{0}, std::vector<int>{1, 1});
  REQUIRE(al2.ops.size() == 2);
  CHECK(al2.ops[0].op == m::EditOp::kInsert);
  CHECK(al2.ops[1].op == m::EditOp::kSubstitute);
  // ref [a, b], hyp [c]: deletion beats insertion on the tie.
  const auto al3 = m::edit_distance(std::vector<int>{0, 1}, std::vector<int>{2});
  REQUIRE(al3.ops.size() == 2);
  CHECK(al3.ops[0].op == m::EditOp::kDelete);
  CHECK(al3.ops[1].op == m::EditOp::kSubstitute);
}

TEST_CASE("edit_distance equals the exhaustive oracle on random pairs") {
  std::mt19937 rng(2024);
  for (int trial = 0; trial < 1000; ++trial) {
    const int alphabet = 1 + trial % 4;
    const auto a = random_seq(rng, alphabet, 8);
    const auto b = random_seq(rng, alphabet, 8);
    const auto al = m::edit_distance(a, b);
    REQUIRE(al.distance() == brute_distance(a, 0, b, 0));
    CHECK(al.substitutions + al.deletions + al.matches == a.size());
    CHECK(al.substitutions + al.insertions + al.matches == b.size());
    check_script(a, b, al);
    // Determinism: same op list on a second call.
    const auto again = m::edit_distance(a, b);
    REQUIRE(again.ops.size() == al.ops.size());
    for (std::size_t k = 0; k < al.ops.size(); ++k) CHECK(again.ops[k].op == al.ops[k].op);
  }
}

TEST_CASE("edit_distance is a metric on random triples") {
  std::mt19937 rng(99);
  for (int trial = 0; trial < 1000; ++trial) {
    const auto a = random_seq(rng, 3, 12);
    const auto b = random_seq(rng, 3, 12);
    const auto c = random_seq(rng, 3, 12);
    const auto ab = m::edit_distance(a, b).distance();
    CHECK(ab == m::edit_distance(b, a).distance());
    CHECK(m::edit_distance(a, c).distance() <= ab + m::edit_distance(b, c).distance());
  }
}

TEST_CASE("wer examples") {
  const auto raw = tn::NormalizationConfig::None();
  const auto filter = tn::NormalizationConfig::PunctuationFilter();
  CHECK(m::wer("hello world", "hello world", raw) == 0.0);
  CHECK(m::wer("hello, world.", "hello world", raw) == doctest::Approx(1.0));
  CHECK(m::wer("hello, world.", "hello world", filter) == 0.0);
  CHECK(m::wer("a b c", "", raw) == doctest::Approx(1.0));
  // Insertions can push WER past 1.
  CHECK(m::wer("a", "x y z", raw) == doctest::Approx(3.0));
  CHECK_THROWS_KIND(m::wer("", "x", raw), lrasr::ErrorKind::kEmptyReference);
  CHECK_THROWS_KIND(m::wer(" , . ", "x", filter), lrasr::ErrorKind::kEmptyReference);
}

TEST_CASE("wer matches the oracle on both tokenizations") {
  const auto raw = tn::NormalizationConfig::None();
  const auto filter = tn::NormalizationConfig::PunctuationFilter();
  const std::string ref = "the cat, sat on the mat.";
  const std::string hyp = "the cat sat on a mat";
  const auto r_raw = tn::tokenize_words(tn::normalize(ref, raw));
  const auto h_raw = tn::tokenize_words(tn::normalize(hyp, raw));
  CHECK(m::wer(ref, hyp, raw) ==
        doctest::Approx(double(brute_distance(r_raw, h_raw)) / double(r_raw.size())));
  const auto r_f = tn::tokenize_words(tn::normalize(ref, filter));
  const auto h_f = tn::tokenize_words(tn::normalize(hyp, filter));
  CHECK(m::wer(ref, hyp, filter) ==
        doctest::Approx(double(brute_distance(r_f, h_f)) / double(r_f.size())));
  CHECK(m::wer(ref, hyp, filter) == doctest::Approx(1.0 / 6.0));
}

TEST_CASE("cer examples") {
  const auto raw = tn::NormalizationConfig::None();
  CHECK(m::cer("abc", "abc", raw) == 0.0);
  CHECK(m::cer("abc", "abd", raw) == doctest::Approx(1.0 / 3.0));
  CHECK(m::cer("கா", "க", raw) == doctest::Approx(1.0));
  // Code-point mode sees two units in the reference and one deletion.
  CHECK(m::cer("கா", "க", raw, {m::CharUnit::kCodePoint, true}) == doctest::Approx(0.5));
  // Single internal spaces are units; doubled spaces collapse to one.
  CHECK(m::cer("ab cd", "abcd", raw) == doctest::Approx(1.0 / 5.0));
  CHECK(m::cer("ab   cd", "ab cd", raw) == 0.0);
  CHECK(m::cer("ab cd", "abcd", raw, {m::CharUnit::kGrapheme, false}) == 0.0);
  CHECK_THROWS_KIND(m::cer("   ", "x", raw), lrasr::ErrorKind::kEmptyReference);
}

TEST_CASE("punctuation-only mismatch property") {
  const auto raw = tn::NormalizationConfig::None();
  const auto filter = tn::NormalizationConfig::PunctuationFilter();
  std::mt19937 rng(17);
  const std::vector<std::string> words{"alpha", "beta", "gamma", "நன்றி", "வணக்கம்"};
  const std::vector<std::string> marks{",", ".", "?", "!", ";", "—", "«"};
  for (int trial = 0; trial < 500; ++trial) {
    std::string ref;
    bool punctuated = false;
    const int n = 1 + static_cast<int>(rng() % 6);
    for (int i = 0; i < n; ++i) {
      if (i) ref += ' ';
      ref += words[rng() % words.size()];
      if (rng() % 3 == 0) {
        ref += marks[rng() % marks.size()];
        punctuated = true;
      }
    }
    const std::string hyp = tn::normalize(ref, filter);
    CHECK(m::wer(ref, hyp, filter) == 0.0);
    if (punctuated) CHECK(m::wer(ref, hyp, raw) > 0.0);
  }
}

TEST_CASE("corpus_eval pools counts") {
  const auto raw = tn::NormalizationConfig::None();
  const std::vector<m::UtterancePair> pairs{
      {"A", "a b c d", "a x c"},            // 1 sub + 1 del = 2 errors / 4
      {"B", "e f g h i j", "e f g h i j"},  // 0 / 6
  };
  const auto report = m::corpus_eval(pairs, raw);
  CHECK(report.per_utterance.size() == 2);
  CHECK(report.per_utterance[0].wer == doctest::Approx(0.5));
  CHECK(report.pooled_wer == doctest::Approx(0.2));
  CHECK(report.word_totals.reference_length == 10);

  const std::vector<m::UtterancePair> clean{{"x", "a b", "a b"}, {"y", "c", "c"}};
  CHECK(m::corpus_eval(clean, raw).pooled_wer == 0.0);
}

TEST_CASE("corpus_eval excludes empty references and is order independent") {
  const auto filter = tn::NormalizationConfig::PunctuationFilter();
  std::vector<m::UtterancePair> pairs{
      {"1", "a b c", "a b"}, {"2", "...", "x"}, {"3", "d, e f g", "d e x g"}, {"4", "h", "h i"}};
  const auto report = m::corpus_eval(pairs, filter, {}, 1);
  REQUIRE(report.excluded.size() == 1);
  CHECK(report.excluded[0].id == "2");
  CHECK(report.per_utterance.size() == 3);

  std::mt19937 rng(1);
  for (int t = 0; t < 10; ++t) {
    std::shuffle(pairs.begin(), pairs.end(), rng);
    const auto other = m::corpus_eval(pairs, filter, {}, 3);
    CHECK(other.pooled_wer == report.pooled_wer);
    CHECK(other.pooled_cer == report.pooled_cer);
    CHECK(other.word_totals.errors() == report.word_totals.errors());
    CHECK(other.char_totals.reference_length == report.char_totals.reference_length);
  }

  const std::vector<m::UtterancePair> empty{{"z", "!!", "a"}};
  CHECK_THROWS_KIND(m::corpus_eval(empty, filter), lrasr::ErrorKind::kAllReferencesEmpty);
}

TEST_CASE("report serialization") {
  const std::vector<m::UtterancePair> pairs{{"u1", "a b", "a c"}, {"u2", "", "q"}};
  const auto report = m::corpus_eval(pairs, tn::NormalizationConfig::None());
  std::ostringstream table, jsonl;
  m::write_table(table, report);
  m::write_jsonl(jsonl, report);
  CHECK(table.str().find("u1") != std::string::npos);

  std::istringstream in(jsonl.str());
  std::string line;
  std::vector<nlohmann::json> records;
  while (std::getline(in, line)) records.push_back(nlohmann::json::parse(line));
  REQUIRE(records.size() >= 2);
  const auto& summary = records.back();
  CHECK(summary.at("type") == "summary");
  CHECK(summary.at("pooled_wer").get<double>() == doctest::Approx(0.5));
  CHECK(summary.at("normalization").get<std::string>() ==
        tn::NormalizationConfig::None().ToString());
}
