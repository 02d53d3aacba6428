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

#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>

#include "json.hpp"
#include "lrasr/errors.hpp"

namespace lrasr::metrics {
namespace {

ErrorCounts counts_from(const Alignment& al, std::size_t reference_length) {
  return {al.substitutions, al.deletions, al.insertions, reference_length};
}

std::string join_words(const std::vector<std::string>& words) {
  std::string out;
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (i) out.push_back(' ');
    out += words[i];
  }
  return out;
}

double ratio(const ErrorCounts& c) {
  return static_cast<double>(c.errors()) / static_cast<double>(c.reference_length);
}

nlohmann::json counts_json(const ErrorCounts& c) {
  return {{"sub", c.substitutions},
          {"del", c.deletions},
          {"ins", c.insertions},
          {"ref", c.reference_length}};
}

}  // namespace

ErrorCounts& ErrorCounts::operator+=(const ErrorCounts& o) {
  substitutions += o.substitutions;
  deletions += o.deletions;
  insertions += o.insertions;
  reference_length += o.reference_length;
  return *this;
}

std::vector<std::string> char_units(std::string_view normalized, const CharOptions& options) {
  const auto words = textnorm::tokenize_words(normalized);
  std::string text;
  if (options.include_spaces) {
    text = join_words(words);
  } else {
    for (const auto& w : words) text += w;
  }
  return options.unit == CharUnit::kGrapheme ? textnorm::graphemes(text)
                                             : textnorm::code_points(text);
}

ErrorCounts word_errors(std::string_view ref, std::string_view hyp,
                        const textnorm::NormalizationConfig& norm) {
  const auto r = textnorm::tokenize_words(textnorm::normalize(ref, norm));
  if (r.empty()) throw Error(ErrorKind::kEmptyReference, "reference has no words");
  const auto h = textnorm::tokenize_words(textnorm::normalize(hyp, norm));
  return counts_from(edit_distance(r, h), r.size());
}

ErrorCounts char_errors(std::string_view ref, std::string_view hyp,
                        const textnorm::NormalizationConfig& norm, const CharOptions& options) {
  const auto r = char_units(textnorm::normalize(ref, norm), options);
  if (r.empty()) throw Error(ErrorKind::kEmptyReference, "reference has no characters");
  const auto h = char_units(textnorm::normalize(hyp, norm), options);
  return counts_from(edit_distance(r, h), r.size());
}

double wer(std::string_view ref, std::string_view hyp, const textnorm::NormalizationConfig& norm) {
  return ratio(word_errors(ref, hyp, norm));
}

double cer(std::string_view ref, std::string_view hyp, const textnorm::NormalizationConfig& norm,
           const CharOptions& options) {
  return ratio(char_errors(ref, hyp, norm, options));
}

EvalReport corpus_eval(std::span<const UtterancePair> pairs,
                       const textnorm::NormalizationConfig& norm, const CharOptions& options,
                       int jobs) {
  std::vector<std::optional<UtteranceScore>> scores(pairs.size());
  std::vector<std::string> failures(pairs.size());

  const auto n = static_cast<std::ptrdiff_t>(pairs.size());
#pragma omp parallel for schedule(dynamic, 4) num_threads(jobs > 0 ? jobs : 1) if (jobs > 1)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto& p = pairs[static_cast<std::size_t>(i)];
    try {
      UtteranceScore s;
      s.id = p.id;
      s.word = word_errors(p.reference, p.hypothesis, norm);
      s.character = char_errors(p.reference, p.hypothesis, norm, options);
      s.wer = ratio(s.word);
      s.cer = ratio(s.character);
      scores[static_cast<std::size_t>(i)] = std::move(s);
    } catch (const Error& e) {
      failures[static_cast<std::size_t>(i)] = e.what();
    }
  }

  EvalReport report;
  report.normalization = norm;
  report.char_options = options;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    if (!scores[i]) {
      report.excluded.push_back({pairs[i].id, failures[i]});
      continue;
    }
    report.word_totals += scores[i]->word;
    report.char_totals += scores[i]->character;
    report.per_utterance.push_back(std::move(*scores[i]));
  }
  if (report.per_utterance.empty())
    throw Error(ErrorKind::kAllReferencesEmpty, "no utterance has a non-empty reference");
  report.pooled_wer = ratio(report.word_totals);
  report.pooled_cer = ratio(report.char_totals);
  return report;
}

void write_table(std::ostream& os, const EvalReport& report) {
  std::size_t id_width = 2;
  for (const auto& u : report.per_utterance) id_width = std::max(id_width, u.id.size());

  const auto pct = [](double r) {
    std::ostringstream s;
    s << std::fixed << std::setprecision(2) << 100.0 * r;
    return s.str();
  };
  os << "normalization: " << report.normalization.ToString() << '\n';
  os << std::left << std::setw(static_cast<int>(id_width)) << "id" << std::right << std::setw(9)
     << "WER%" << std::setw(9) << "CER%" << std::setw(6) << "S" << std::setw(6) << "D"
     << std::setw(6) << "I" << std::setw(6) << "N" << '\n';
  for (const auto& u : report.per_utterance) {
    os << std::left << std::setw(static_cast<int>(id_width)) << u.id << std::right << std::setw(9)
       << pct(u.wer) << std::setw(9) << pct(u.cer) << std::setw(6) << u.word.substitutions
       << std::setw(6) << u.word.deletions << std::setw(6) << u.word.insertions << std::setw(6)
       << u.word.reference_length << '\n';
  }
  for (const auto& v : report.excluded) os << "excluded " << v.id << ": " << v.reason << '\n';
  os << "pooled WER " << pct(report.pooled_wer) << "% [" << report.word_totals.errors() << " / "
     << report.word_totals.reference_length << ", " << report.word_totals.substitutions << " sub, "
     << report.word_totals.deletions << " del, " << report.word_totals.insertions << " ins]\n";
  os << "pooled CER " << pct(report.pooled_cer) << "% [" << report.char_totals.errors() << " / "
     << report.char_totals.reference_length << "]\n";
}

void write_jsonl(std::ostream& os, const EvalReport& report) {
  for (const auto& u : report.per_utterance) {
    nlohmann::json rec = {{"type", "utterance"},
                          {"id", u.id},
                          {"wer", u.wer},
                          {"cer", u.cer},
                          {"word", counts_json(u.word)},
                          {"char", counts_json(u.character)}};
    os << rec.dump() << '\n';
  }
  for (const auto& v : report.excluded) {
    os << nlohmann::json{{"type", "excluded"}, {"id", v.id}, {"reason", v.reason}}.dump() << '\n';
  }
  nlohmann::json summary = {
      {"type", "summary"},
      {"utterances", report.per_utterance.size()},
      {"excluded", report.excluded.size()},
      {"pooled_wer", report.pooled_wer},
      {"pooled_cer", report.pooled_cer},
      {"word", counts_json(report.word_totals)},
      {"char", counts_json(report.char_totals)},
      {"normalization", report.normalization.ToString()},
      {"char_unit", report.char_options.unit == CharUnit::kGrapheme ? "grapheme" : "codepoint"},
      {"char_spaces", report.char_options.include_spaces}};
  os << summary.dump() << '\n';
}

std::string render_alignment(std::span<const std::string> ref, std::span<const std::string> hyp,
                             const Alignment& al) {
  std::ostringstream top, bottom, marks;
  for (const auto& op : al.ops) {
    const std::string r = op.ref_index >= 0 ? ref[static_cast<std::size_t>(op.ref_index)] : "*";
    const std::string h = op.hyp_index >= 0 ? hyp[static_cast<std::size_t>(op.hyp_index)] : "*";
    const int w = static_cast<int>(std::max(r.size(), h.size()));
    const char* mark = op.op == EditOp::kMatch        ? ""
                       : op.op == EditOp::kSubstitute ? "S"
                       : op.op == EditOp::kDelete     ? "D"
                                                      : "I";
    top << std::left << std::setw(w) << r << ' ';
    bottom << std::left << std::setw(w) << h << ' ';
    marks << std::left << std::setw(w) << mark << ' ';
  }
  return "REF: " + top.str() + "\nHYP: " + bottom.str() + "\n     " + marks.str() + "\n";
}

}  // namespace lrasr::metrics
