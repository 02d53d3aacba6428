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

// Manifest-based corpus management.
//
// A manifest is UTF-8 JSON lines: one header record, then one record per
// utterance with the fields `id, audio, text, duration, sample_rate, speaker,
// split`. Audio paths are relative to the manifest's directory unless
// absolute. The manifest is the only source of truth; audio directories are
// never scanned.

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace lrasr::corpus {

inline constexpr double kMaxUtteranceSeconds = 30.0;
inline constexpr int kSampleRate = 16000;
inline constexpr int kManifestVersion = 1;

enum class Split { kTrain = 0, kValidation = 1, kTest = 2 };

std::string_view split_name(Split s);
Split parse_split(std::string_view name);

struct UtteranceRecord {
  std::string id;
  std::string audio;
  std::string text;
  double duration = 0;
  int sample_rate = kSampleRate;
  std::optional<std::string> speaker;
  std::optional<Split> split;

  friend bool operator==(const UtteranceRecord&, const UtteranceRecord&) = default;
};

struct ManifestHeader {
  std::string language = "und";
  std::string script = "Zyyy";
  int version = kManifestVersion;

  friend bool operator==(const ManifestHeader&, const ManifestHeader&) = default;
};

struct Manifest {
  ManifestHeader header;
  std::vector<UtteranceRecord> records;
  // Directory that relative audio paths resolve against.
  std::filesystem::path base_dir;

  double total_duration() const;
  std::filesystem::path audio_path(const UtteranceRecord& r) const;
};

// Throw Error(kParse) on malformed input, Error(kIo) on unreadable files.
Manifest parse_manifest(std::istream& in, const std::filesystem::path& base_dir = {});
Manifest read_manifest(const std::filesystem::path& path);
void write_manifest(std::ostream& out, const Manifest& manifest);
void write_manifest(const std::filesystem::path& path, const Manifest& manifest);

enum class ViolationKind {
  kMaxDurationExceeded,
  kSampleRateMismatch,
  kEmptyTranscript,
  kMissingAudio,
  kDuplicateId,
  kNegativeDuration,
};

std::string_view violation_name(ViolationKind kind);

struct CorpusViolation {
  ViolationKind kind;
  std::string id;

  friend bool operator==(const CorpusViolation&, const CorpusViolation&) = default;
};

// One entry per failed constraint; empty iff the manifest is clean.
std::vector<CorpusViolation> validate(const Manifest& manifest, bool check_audio_files = true);

struct SplitSpec {
  std::array<double, 3> ratios{0.70, 0.10, 0.20};  // train, validation, test
  std::uint64_t seed = 0;
  bool stratify_by_speaker = false;
  double tolerance = 0.02;
};

struct SplitResult {
  Manifest train;
  Manifest validation;
  Manifest test;

  const Manifest& operator[](Split s) const;
};

// Duration-balanced partition: units (records, or speaker groups when
// stratifying) are shuffled by the seed, ordered longest first, and each is
// assigned to the split furthest below its duration target. Throws
// Error(kInfeasibleSplit) when a split's duration fraction misses its ratio by
// more than the tolerance.
SplitResult split(const Manifest& manifest, const SplitSpec& spec);

struct CorpusStats {
  std::size_t utterances = 0;
  double total_seconds = 0;
  double min_seconds = 0;
  double max_seconds = 0;
  double mean_seconds = 0;
  std::map<std::string, double> per_speaker;
  std::map<std::string, double> per_split;
};

CorpusStats stats(const Manifest& manifest);

// H:MM:SS, with a fractional part (millisecond resolution, trailing zeros
// dropped) only when the value is not a whole second: 30.5 -> "0:00:30.5".
std::string format_hms(double seconds);

void write_stats(std::ostream& os, const CorpusStats& s);

struct Segmentation {
  std::vector<std::filesystem::path> files;
  std::vector<UtteranceRecord> drafts;
};

// Cuts `audio_file` at floor(t * sample_rate) for each boundary t (seconds,
// strictly increasing, inside the file) and writes <stem>_NNN.wav into
// `out_dir`. Nothing is written if any segment would exceed 30 s
// (Error(kSegmentTooLong)) or the boundaries are unusable (Error(kBadBoundaries)).
Segmentation segment_audio(const std::filesystem::path& audio_file,
                           std::span<const double> boundaries,
                           const std::filesystem::path& out_dir);

}  // namespace lrasr::corpus
