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

// Unicode text cleanup applied to references and hypotheses before scoring.
//
// Punctuation and symbols are defined by Unicode general category (P* and S*),
// which works identically for every script. Removed code points are
// deleted, not replaced by a space, so "hello," becomes "hello". There is no
// case folding.

#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace lrasr::textnorm {

struct NormalizationConfig {
  bool remove_punctuation = false;
  bool remove_symbols = false;
  bool collapse_whitespace = false;
  bool trim = false;

  // Punctuation removal with whitespace collapse and trim: the scoring filter.
  static NormalizationConfig PunctuationFilter();
  static NormalizationConfig None() { return {}; }

  // Canonical form, e.g.
  // "remove_punctuation=1;remove_symbols=0;collapse_whitespace=1;trim=1".
  std::string ToString() const;
  // Throws Error(kParse) on anything but the canonical form (keys in any order).
  static NormalizationConfig Parse(std::string_view text);

  // Short label used in reports: "raw", "punct", "punct+sym", ...
  std::string Label() const;

  friend bool operator==(const NormalizationConfig&, const NormalizationConfig&) = default;
};

std::string normalize(std::string_view text, const NormalizationConfig& config);

// Maximal runs of non-whitespace (Unicode White_Space).
std::vector<std::string> tokenize_words(std::string_view text);

// Extended grapheme clusters; concatenating the result reproduces `text`.
std::vector<std::string> graphemes(std::string_view text);

// One entry per code point; the documented fallback unit for CER.
std::vector<std::string> code_points(std::string_view text);

bool is_punctuation(char32_t cp);
bool is_symbol(char32_t cp);
bool is_whitespace(char32_t cp);

// UTF-8 helpers. Invalid sequences decode to U+FFFD.
std::u32string to_utf32(std::string_view text);
std::string to_utf8(std::u32string_view text);

}  // namespace lrasr::textnorm
