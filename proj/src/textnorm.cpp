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

#include <unicode/ubrk.h>
#include <unicode/uchar.h>
#include <unicode/utext.h>
#include <unicode/utf8.h>

#include <map>
#include <memory>

#include "lrasr/errors.hpp"

namespace lrasr::textnorm {
namespace {

constexpr char32_t kReplacement = 0xFFFD;

// Calls fn(code_point, byte_offset, byte_length) for each code point.
template <typename Fn>
void for_each_code_point(std::string_view text, Fn&& fn) {
  const auto* s = reinterpret_cast<const uint8_t*>(text.data());
  const int32_t length = static_cast<int32_t>(text.size());
  int32_t i = 0;
  while (i < length) {
    const int32_t start = i;
    UChar32 c;
    U8_NEXT(s, i, length, c);
    fn(c < 0 ? kReplacement : static_cast<char32_t>(c), start, i - start);
  }
}

void append_utf8(std::string& out, char32_t cp) {
  uint8_t buf[U8_MAX_LENGTH];
  int32_t n = 0;
  UBool error = false;
  U8_APPEND(buf, n, U8_MAX_LENGTH, static_cast<UChar32>(cp), error);
  if (error) {
    n = 0;
    U8_APPEND_UNSAFE(buf, n, kReplacement);
  }
  out.append(reinterpret_cast<const char*>(buf), static_cast<std::size_t>(n));
}

struct BreakIteratorCloser {
  void operator()(UBreakIterator* bi) const { ubrk_close(bi); }
};

UBreakIterator* character_break_iterator() {
  thread_local std::unique_ptr<UBreakIterator, BreakIteratorCloser> iter = [] {
    UErrorCode status = U_ZERO_ERROR;
    UBreakIterator* bi = ubrk_open(UBRK_CHARACTER, "", nullptr, 0, &status);
    if (U_FAILURE(status))
      throw Error(ErrorKind::kInvalidArgument,
                  std::string("cannot open grapheme break iterator: ") + u_errorName(status));
    return std::unique_ptr<UBreakIterator, BreakIteratorCloser>(bi);
  }();
  return iter.get();
}

bool parse_bool(std::string_view v) {
  if (v == "1" || v == "true") return true;
  if (v == "0" || v == "false") return false;
  throw Error(ErrorKind::kParse, "expected boolean, got '" + std::string(v) + "'");
}

}  // namespace

bool is_punctuation(char32_t cp) {
  return (U_GET_GC_MASK(static_cast<UChar32>(cp)) & U_GC_P_MASK) != 0;
}

bool is_symbol(char32_t cp) { return (U_GET_GC_MASK(static_cast<UChar32>(cp)) & U_GC_S_MASK) != 0; }

bool is_whitespace(char32_t cp) { return u_isUWhiteSpace(static_cast<UChar32>(cp)); }

std::u32string to_utf32(std::string_view text) {
  std::u32string out;
  out.reserve(text.size());
  for_each_code_point(text, [&](char32_t cp, int32_t, int32_t) { out.push_back(cp); });
  return out;
}

std::string to_utf8(std::u32string_view text) {
  std::string out;
  out.reserve(text.size());
  for (char32_t cp : text) append_utf8(out, cp);
  return out;
}

NormalizationConfig NormalizationConfig::PunctuationFilter() {
  return {.remove_punctuation = true,
          .remove_symbols = false,
          .collapse_whitespace = true,
          .trim = true};
}

std::string NormalizationConfig::ToString() const {
  auto b = [](bool v) { return v ? "1" : "0"; };
  return std::string("remove_punctuation=") + b(remove_punctuation) +
         ";remove_symbols=" + b(remove_symbols) + ";collapse_whitespace=" + b(collapse_whitespace) +
         ";trim=" + b(trim);
}

NormalizationConfig NormalizationConfig::Parse(std::string_view text) {
  std::map<std::string, bool*> fields;
  NormalizationConfig cfg;
  fields["remove_punctuation"] = &cfg.remove_punctuation;
  fields["remove_symbols"] = &cfg.remove_symbols;
  fields["collapse_whitespace"] = &cfg.collapse_whitespace;
  fields["trim"] = &cfg.trim;

  std::size_t seen = 0;
  while (!text.empty()) {
    const auto semi = text.find(';');
    const std::string_view item = text.substr(0, semi);
    text = semi == std::string_view::npos ? std::string_view{} : text.substr(semi + 1);
    const auto eq = item.find('=');
    if (eq == std::string_view::npos)
      throw Error(ErrorKind::kParse, "normalization item without '=': " + std::string(item));
    auto it = fields.find(std::string(item.substr(0, eq)));
    if (it == fields.end() || it->second == nullptr)
      throw Error(ErrorKind::kParse,
                  "unknown or repeated normalization key: " + std::string(item.substr(0, eq)));
    *it->second = parse_bool(item.substr(eq + 1));
    it->second = nullptr;
    ++seen;
  }
  if (seen != fields.size())
    throw Error(ErrorKind::kParse, "normalization config must set all four keys");
  return cfg;
}

std::string NormalizationConfig::Label() const {
  std::string label;
  if (remove_punctuation) label += "punct";
  if (remove_symbols) label += label.empty() ? "sym" : "+sym";
  if (label.empty()) label = "raw";
  return label;
}

std::string normalize(std::string_view text, const NormalizationConfig& config) {
  std::string out;
  out.reserve(text.size());
  bool pending_space = false;  // collapse mode: a whitespace run is open
  for_each_code_point(text, [&](char32_t cp, int32_t offset, int32_t length) {
    if (config.remove_punctuation && is_punctuation(cp)) return;
    if (config.remove_symbols && is_symbol(cp)) return;
    if (config.collapse_whitespace) {
      if (is_whitespace(cp)) {
        pending_space = true;
        return;
      }
      if (pending_space) {
        out.push_back(' ');
        pending_space = false;
      }
    }
    out.append(text.substr(static_cast<std::size_t>(offset), static_cast<std::size_t>(length)));
  });
  if (pending_space) out.push_back(' ');
  if (!config.trim) return out;

  // Trim leading and trailing White_Space code points.
  const std::u32string wide = to_utf32(out);
  std::size_t begin = 0, end = wide.size();
  while (begin < end && is_whitespace(wide[begin])) ++begin;
  while (end > begin && is_whitespace(wide[end - 1])) --end;
  if (begin == 0 && end == wide.size()) return out;
  return to_utf8(std::u32string_view(wide).substr(begin, end - begin));
}

std::vector<std::string> tokenize_words(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  for_each_code_point(text, [&](char32_t cp, int32_t offset, int32_t length) {
    if (is_whitespace(cp)) {
      if (!current.empty()) tokens.push_back(std::move(current));
      current.clear();
      return;
    }
    current.append(text.substr(static_cast<std::size_t>(offset), static_cast<std::size_t>(length)));
  });
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

std::vector<std::string> graphemes(std::string_view text) {
  std::vector<std::string> clusters;
  if (text.empty()) return clusters;

  UErrorCode status = U_ZERO_ERROR;
  UText* ut = utext_openUTF8(nullptr, text.data(), static_cast<int64_t>(text.size()), &status);
  UBreakIterator* bi = character_break_iterator();
  ubrk_setUText(bi, ut, &status);
  if (U_FAILURE(status)) {
    utext_close(ut);
    throw Error(ErrorKind::kInvalidArgument,
                std::string("grapheme segmentation failed: ") + u_errorName(status));
  }
  int32_t start = ubrk_first(bi);
  for (int32_t end = ubrk_next(bi); end != UBRK_DONE; start = end, end = ubrk_next(bi)) {
    clusters.emplace_back(
        text.substr(static_cast<std::size_t>(start), static_cast<std::size_t>(end - start)));
  }
  utext_close(ut);
  return clusters;
}

std::vector<std::string> code_points(std::string_view text) {
  std::vector<std::string> out;
  for_each_code_point(text, [&](char32_t, int32_t offset, int32_t length) {
    out.emplace_back(
        text.substr(static_cast<std::size_t>(offset), static_cast<std::size_t>(length)));
  });
  return out;
}

}  // namespace lrasr::textnorm
