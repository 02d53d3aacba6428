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

// Levenshtein alignment and WER/CER scoring.
//
// Error rates are ratios (not percentages) everywhere in the library; they
// can exceed 1 when the hypothesis has many insertions. Corpus figures are
// pooled: total errors over total reference units.

#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lrasr/textnorm.hpp"

namespace lrasr::metrics {

enum class EditOp : std::uint8_t { kMatch, kSubstitute, kDelete, kInsert };

struct AlignedPair {
  EditOp op;
  std::ptrdiff_t ref_index;  // -1 for insertions
  std::ptrdiff_t hyp_index;  // -1 for deletions
};

struct Alignment {
  std::vector<AlignedPair> ops;
  std::size_t substitutions = 0;
  std::size_t deletions = 0;
  std::size_t insertions = 0;
  std::size_t matches = 0;

  std::size_t distance() const { return substitutions + deletions + insertions; }
};

// Minimal unit-cost alignment. Ties during the backtrace prefer the diagonal
// (match or substitute), then deletion, then insertion, so the op sequence is
// reproducible and not just the distance.
template <typename Token>
Alignment edit_distance(std::span<const Token> ref, std::span<const Token> hyp) {
  const std::size_t n = ref.size(), m = hyp.size();
  const std::size_t width = m + 1;
  std::vector<std::uint32_t> cost((n + 1) * width);
  for (std::size_t j = 0; j <= m; ++j) cost[j] = static_cast<std::uint32_t>(j);
  for (std::size_t i = 1; i <= n; ++i) {
    cost[i * width] = static_cast<std::uint32_t>(i);
    for (std::size_t j = 1; j <= m; ++j) {
      const std::uint32_t diag =
          cost[(i - 1) * width + j - 1] + (ref[i - 1] == hyp[j - 1] ? 0u : 1u);
      const std::uint32_t del = cost[(i - 1) * width + j] + 1;
      const std::uint32_t ins = cost[i * width + j - 1] + 1;
      cost[i * width + j] = std::min(diag, std::min(del, ins));
    }
  }

  Alignment al;
  std::size_t i = n, j = m;
  while (i > 0 || j > 0) {
    const std::uint32_t here = cost[i * width + j];
    if (i > 0 && j > 0) {
      const bool same = ref[i - 1] == hyp[j - 1];
      if (here == cost[(i - 1) * width + j - 1] + (same ? 0u : 1u)) {
        --i;
        --j;
        al.ops.push_back({same ? EditOp::kMatch : EditOp::kSubstitute,
                          static_cast<std::ptrdiff_t>(i), static_cast<std::ptrdiff_t>(j)});
        ++(same ? al.matches : al.substitutions);
        continue;
      }
    }
    if (i > 0 && here == cost[(i - 1) * width + j] + 1) {
      --i;
      al.ops.push_back({EditOp::kDelete, static_cast<std::ptrdiff_t>(i), -1});
      ++al.deletions;
      continue;
    }
    --j;
    al.ops.push_back({EditOp::kInsert, -1, static_cast<std::ptrdiff_t>(j)});
    ++al.insertions;
  }
  std::reverse(al.ops.begin(), al.ops.end());
  return al;
}

template <typename Token>
Alignment edit_distance(const std::vector<Token>& ref, const std::vector<Token>& hyp) {
  return edit_distance(std::span<const Token>(ref), std::span<const Token>(hyp));
}

enum class CharUnit { kGrapheme, kCodePoint };

struct CharOptions {
  CharUnit unit = CharUnit::kGrapheme;
  // Words are re-joined with single spaces and each space counts as a unit.
  bool include_spaces = true;
};

// Units that CER is computed over, after normalization.
std::vector<std::string> char_units(std::string_view normalized, const CharOptions& options);

struct ErrorCounts {
  std::size_t substitutions = 0;
  std::size_t deletions = 0;
  std::size_t insertions = 0;
  std::size_t reference_length = 0;

  std::size_t errors() const { return substitutions + deletions + insertions; }
  ErrorCounts& operator+=(const ErrorCounts& o);
};

ErrorCounts word_errors(std::string_view ref, std::string_view hyp,
                        const textnorm::NormalizationConfig& norm);
ErrorCounts char_errors(std::string_view ref, std::string_view hyp,
                        const textnorm::NormalizationConfig& norm, const CharOptions& options = {});

// Both throw Error(kEmptyReference) when the normalized reference is empty.
double wer(std::string_view ref, std::string_view hyp, const textnorm::NormalizationConfig& norm);
double cer(std::string_view ref, std::string_view hyp, const textnorm::NormalizationConfig& norm,
           const CharOptions& options = {});

struct UtterancePair {
  std::string id;
  std::string reference;
  std::string hypothesis;
};

struct UtteranceScore {
  std::string id;
  double wer = 0;
  double cer = 0;
  ErrorCounts word;
  ErrorCounts character;
};

struct Violation {
  std::string id;
  std::string reason;
};

struct EvalReport {
  std::vector<UtteranceScore> per_utterance;
  std::vector<Violation> excluded;
  ErrorCounts word_totals;
  ErrorCounts char_totals;
  double pooled_wer = 0;
  double pooled_cer = 0;
  textnorm::NormalizationConfig normalization;
  CharOptions char_options;
};

// Scores every pair; pairs whose normalized reference is empty are recorded in
// `excluded`. Throws Error(kAllReferencesEmpty) when nothing survives. Rows
// keep input order; pooled figures do not depend on it. `jobs` > 1 scores
// utterances concurrently.
EvalReport corpus_eval(std::span<const UtterancePair> pairs,
                       const textnorm::NormalizationConfig& norm, const CharOptions& options = {},
                       int jobs = 1);

// Human-readable aligned table.
void write_table(std::ostream& os, const EvalReport& report);
// One JSON object per line: a record per utterance, then a summary record.
void write_jsonl(std::ostream& os, const EvalReport& report);

// "hello world" / "hello  word" style alignment rendering for diagnostics.
std::string render_alignment(std::span<const std::string> ref, std::span<const std::string> hyp,
                             const Alignment& al);

}  // namespace lrasr::metrics
