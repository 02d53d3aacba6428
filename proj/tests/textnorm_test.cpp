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

#include "lrasr/textnorm.hpp"

#include <random>
#include <set>
#include <string>
#include <vector>

#include "doctest.h"
#include "test_util.hpp"

namespace tn = lrasr::textnorm;

namespace {

// General categories of the printable ASCII non-alphanumerics, copied from
// UnicodeData.txt: P* for these ...
const std::string kAsciiPunctuation = "!\"#%&'()*,-./:;?@[\\]_{}";
// ... and S* (Sm, Sc, Sk) for these.
const std::string kAsciiSymbols = "$+<=>^`|~";

tn::NormalizationConfig all_on() { return {true, true, true, true}; }

// Random strings drawn from a pool that mixes ASCII, Tamil letters and signs,
// combining marks, punctuation from several blocks, symbols and whitespace.
std::string random_text(std::mt19937& rng, std::size_t max_len) {
  static const std::vector<char32_t> pool = {
      U'a', U'b',          U'Z',          U'0',          U' ',   U'\t', U'\n', U' ', U'　', U',',
      U'.', U'!',          U'?',          U'-',          U'(',   U')',  U'$',  U'+', U'~',  U'«',
      U'—', U'’',          U'।',          U'க',          U'ா',   U'்',   U'த',  U'௳', U'௹',  U'́',
      U'é', U'\U0001F600', U'\U0001F1FA', U'\U0001F1F8', U'‍', U'\r', U'।',  U'€', U'°'};
  std::uniform_int_distribution<std::size_t> len(0, max_len);
  std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
  std::u32string s;
  const std::size_t n = len(rng);
  for (std::size_t i = 0; i < n; ++i) s.push_back(pool[pick(rng)]);
  return tn::to_utf8(s);
}

// Arbitrary scalar values, including unassigned and astral planes.
std::string random_unicode(std::mt19937& rng, std::size_t max_len) {
  std::uniform_int_distribution<std::size_t> len(0, max_len);
  std::uniform_int_distribution<std::uint32_t> cp(0, 0x10FFFF);
  std::u32string s;
  const std::size_t n = len(rng);
  while (s.size() < n) {
    const std::uint32_t c = cp(rng);
    if (c >= 0xD800 && c <= 0xDFFF) continue;
    s.push_back(static_cast<char32_t>(c));
  }
  return tn::to_utf8(s);
}

}  // namespace

TEST_CASE("normalize with the all-false config is the identity") {
  CHECK(tn::normalize("hello world", tn::NormalizationConfig::None()) == "hello world");
  std::mt19937 rng(7);
  for (int i = 0; i < 2000; ++i) {
    const std::string s = random_text(rng, 24);
    CHECK(tn::normalize(s, tn::NormalizationConfig::None()) == s);
  }
}

TEST_CASE("punctuation filter examples") {
  const auto filter = tn::NormalizationConfig::PunctuationFilter();
  CHECK(tn::normalize("a, b. c?", filter) == "a b c");
  // Tamil letters and signs survive; U+002C goes.
  CHECK(tn::normalize("வணக்கம்,", filter) == "வணக்கம்");
  CHECK(tn::normalize("hello,", filter) == "hello");
  CHECK(tn::normalize("«quoted» — dash", filter) == "quoted dash");
  // Symbols are a separate switch.
  CHECK(tn::normalize("1 + 1 = 2", filter) == "1 + 1 = 2");
  CHECK(tn::normalize("1 + 1 = 2", {false, true, true, true}) == "1 1 2");
}

TEST_CASE("whitespace collapse and trim") {
  CHECK(tn::normalize("  x   y  ", {false, false, true, true}) == "x y");
  CHECK(tn::normalize("  x   y  ", {false, false, true, false}) == " x y ");
  CHECK(tn::normalize("  x   y  ", {false, false, false, true}) == "x   y");
  CHECK(tn::normalize("x\t\n 　y", {false, false, true, false}) == "x y");
  CHECK(tn::normalize("", all_on()).empty());
  CHECK(tn::normalize(" . , ", all_on()).empty());
}

TEST_CASE("category predicates agree with a hand-copied ASCII table") {
  for (char32_t c = 0x21; c < 0x7F; ++c) {
    const bool alnum =
        (c >= U'0' && c <= U'9') || (c >= U'a' && c <= U'z') || (c >= U'A' && c <= U'Z');
    const bool p = kAsciiPunctuation.find(static_cast<char>(c)) != std::string::npos;
    const bool s = kAsciiSymbols.find(static_cast<char>(c)) != std::string::npos;
    REQUIRE(alnum + p + s == 1);
    CHECK_MESSAGE(tn::is_punctuation(c) == p, static_cast<char>(c));
    CHECK_MESSAGE(tn::is_symbol(c) == s, static_cast<char>(c));
  }
  // Tamil block: U+0BF3..U+0BFA are symbols (So/Sc), letters and signs are not.
  for (char32_t c = 0x0BF3; c <= 0x0BFA; ++c) CHECK(tn::is_symbol(c));
  for (char32_t c : {U'க', U'ா', U'்', U'௧'}) {
    CHECK_FALSE(tn::is_punctuation(c));
    CHECK_FALSE(tn::is_symbol(c));
  }
  CHECK(tn::is_punctuation(U'।'));  // DEVANAGARI DANDA, Po
  CHECK(tn::is_punctuation(U'’'));  // Pf
  CHECK(tn::is_symbol(U'€'));       // Sc
  CHECK(tn::is_whitespace(U' '));
  CHECK_FALSE(tn::is_whitespace(U'‍'));
}

TEST_CASE("normalize is idempotent and honours its post-conditions") {
  std::mt19937 rng(11);
  for (int mask = 0; mask < 16; ++mask) {
    const tn::NormalizationConfig c{(mask & 1) != 0, (mask & 2) != 0, (mask & 4) != 0,
                                    (mask & 8) != 0};
    for (int i = 0; i < 300; ++i) {
      const std::string s = random_text(rng, 30);
      const std::string once = tn::normalize(s, c);
      CHECK(tn::normalize(once, c) == once);
      const std::u32string u = tn::to_utf32(once);
      for (std::size_t k = 0; k < u.size(); ++k) {
        if (c.remove_punctuation) CHECK_FALSE(tn::is_punctuation(u[k]));
        if (c.remove_symbols) CHECK_FALSE(tn::is_symbol(u[k]));
        if (c.collapse_whitespace && tn::is_whitespace(u[k])) {
          CHECK(u[k] == U' ');
          if (k + 1 < u.size()) CHECK_FALSE(tn::is_whitespace(u[k + 1]));
        }
      }
      if (c.trim && !u.empty()) {
        CHECK_FALSE(tn::is_whitespace(u.front()));
        CHECK_FALSE(tn::is_whitespace(u.back()));
      }
    }
  }
}

TEST_CASE("config text form round-trips and rejects non-canonical input") {
  for (int mask = 0; mask < 16; ++mask) {
    const tn::NormalizationConfig c{(mask & 1) != 0, (mask & 2) != 0, (mask & 4) != 0,
                                    (mask & 8) != 0};
    CHECK(tn::NormalizationConfig::Parse(c.ToString()) == c);
  }
  CHECK(tn::NormalizationConfig::PunctuationFilter().ToString() ==
        "remove_punctuation=1;remove_symbols=0;collapse_whitespace=1;trim=1");
  CHECK(tn::NormalizationConfig::Parse(
            "trim=1;collapse_whitespace=1;remove_symbols=0;remove_punctuation=1") ==
        tn::NormalizationConfig::PunctuationFilter());
  CHECK_THROWS_KIND(tn::NormalizationConfig::Parse("remove_punctuation=1"),
                    lrasr::ErrorKind::kParse);
  CHECK_THROWS_KIND(tn::NormalizationConfig::Parse(
                        "remove_punctuation=2;remove_symbols=0;collapse_whitespace=1;trim=1"),
                    lrasr::ErrorKind::kParse);
  CHECK_THROWS_KIND(
      tn::NormalizationConfig::Parse(
          "remove_punctuation=1;remove_symbols=0;collapse_whitespace=1;trim=1;case=1"),
      lrasr::ErrorKind::kParse);
  CHECK(tn::NormalizationConfig::None().Label() == "raw");
  CHECK(tn::NormalizationConfig::PunctuationFilter().Label() == "punct");
}

TEST_CASE("tokenize_words") {
  CHECK(tn::tokenize_words("a b c") == std::vector<std::string>{"a", "b", "c"});
  CHECK(tn::tokenize_words("").empty());
  CHECK(tn::tokenize_words(" \t\n ").empty());
  CHECK(tn::tokenize_words("hello,  world.") == std::vector<std::string>{"hello,", "world."});

  // Rejoining with single spaces equals the collapsed, trimmed input.
  std::mt19937 rng(3);
  for (int i = 0; i < 1000; ++i) {
    const std::string s = random_text(rng, 20);
    std::string joined;
    for (const auto& w : tn::tokenize_words(s)) {
      if (!joined.empty()) joined += ' ';
      joined += w;
    }
    CHECK(joined == tn::normalize(s, {false, false, true, true}));
  }
}

TEST_CASE("grapheme clusters") {
  CHECK(tn::graphemes("abc").size() == 3);
  CHECK(tn::graphemes("").empty());
  // Cases from the published grapheme-break test data.
  CHECK(tn::graphemes("கா").size() == 1);                    // TAMIL KA + VOWEL SIGN AA
  CHECK(tn::graphemes("\r\n").size() == 1);                  // GB3
  CHECK(tn::graphemes("é").size() == 1);                     // base + Extend
  CHECK(tn::graphemes("\U0001F1FA\U0001F1F8").size() == 1);  // RI pair
  CHECK(tn::graphemes("\U0001F1FA\U0001F1F8\U0001F1FA").size() == 2);
  CHECK(tn::graphemes("a‍").size() == 1);  // ZWJ extends
  CHECK(tn::graphemes("ந்த").size() == 2);    // virama does not join in Tamil

  std::mt19937 rng(5);
  for (int i = 0; i < 10000; ++i) {
    const std::string s = (i % 2 == 0) ? random_text(rng, 16) : random_unicode(rng, 12);
    std::string joined;
    for (const auto& g : tn::graphemes(s)) {
      CHECK_FALSE(g.empty());
      joined += g;
    }
    CHECK(joined == s);
  }
}

TEST_CASE("utf conversions") {
  const std::string s = "aéக\U0001F600";
  CHECK(tn::to_utf8(tn::to_utf32(s)) == s);
  CHECK(tn::to_utf32(s).size() == 4);
  CHECK(tn::code_points(s).size() == 4);
  CHECK(tn::to_utf32("\xFF") == std::u32string(1, U'�'));
}
