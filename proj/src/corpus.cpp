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

#include "lrasr/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "json.hpp"
#include "lrasr/errors.hpp"
#include "lrasr/textnorm.hpp"
#include "lrasr/wav.hpp"

namespace lrasr::corpus {
namespace {

using nlohmann::json;

// Neumaier-compensated running sum.
class DurationSum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    comp_ += std::abs(sum_) >= std::abs(x) ? (sum_ - t) + x : (x - t) + sum_;
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0;
  double comp_ = 0;
};

template <typename T>
T required(const json& j, const char* key, std::size_t line) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null())
    throw Error(ErrorKind::kParse,
                "line " + std::to_string(line) + ": missing field '" + key + "'");
  try {
    return it->get<T>();
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kParse,
                "line " + std::to_string(line) + ": bad field '" + key + "': " + e.what());
  }
}

std::optional<std::string> optional_string(const json& j, const char* key, std::size_t line) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  if (!it->is_string())
    throw Error(ErrorKind::kParse,
                "line " + std::to_string(line) + ": field '" + key + "' must be a string");
  return it->get<std::string>();
}

}  // namespace

std::string_view split_name(Split s) {
  switch (s) {
    case Split::kTrain:
      return "train";
    case Split::kValidation:
      return "validation";
    case Split::kTest:
      return "test";
  }
  return "train";
}

Split parse_split(std::string_view name) {
  if (name == "train") return Split::kTrain;
  if (name == "validation") return Split::kValidation;
  if (name == "test") return Split::kTest;
  throw Error(ErrorKind::kParse, "unknown split '" + std::string(name) + "'");
}

double Manifest::total_duration() const {
  DurationSum sum;
  for (const auto& r : records) sum.add(r.duration);
  return sum.value();
}

std::filesystem::path Manifest::audio_path(const UtteranceRecord& r) const {
  std::filesystem::path p(r.audio);
  if (p.is_absolute() || base_dir.empty()) return p;
  return base_dir / p;
}

Manifest parse_manifest(std::istream& in, const std::filesystem::path& base_dir) {
  Manifest m;
  m.base_dir = base_dir;
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw Error(ErrorKind::kParse, "line " + std::to_string(line_no) + ": " + e.what());
    }
    if (!j.is_object())
      throw Error(ErrorKind::kParse, "line " + std::to_string(line_no) + ": not an object");
    if (!have_header) {
      if (j.value("type", "") != "header")
        throw Error(ErrorKind::kParse, "first record must be the manifest header");
      m.header.language = required<std::string>(j, "language", line_no);
      m.header.script = required<std::string>(j, "script", line_no);
      m.header.version = required<int>(j, "version", line_no);
      if (m.header.version != kManifestVersion)
        throw Error(ErrorKind::kParse,
                    "unsupported manifest version " + std::to_string(m.header.version));
      have_header = true;
      continue;
    }
    UtteranceRecord r;
    r.id = required<std::string>(j, "id", line_no);
    r.audio = required<std::string>(j, "audio", line_no);
    r.text = required<std::string>(j, "text", line_no);
    r.duration = required<double>(j, "duration", line_no);
    r.sample_rate = required<int>(j, "sample_rate", line_no);
    r.speaker = optional_string(j, "speaker", line_no);
    if (auto s = optional_string(j, "split", line_no)) r.split = parse_split(*s);
    m.records.push_back(std::move(r));
  }
  if (!have_header) throw Error(ErrorKind::kParse, "manifest has no header record");
  return m;
}

Manifest read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, "cannot open manifest " + path.string());
  return parse_manifest(in, path.parent_path());
}

void write_manifest(std::ostream& out, const Manifest& manifest) {
  json header = {{"type", "header"},
                 {"language", manifest.header.language},
                 {"script", manifest.header.script},
                 {"version", manifest.header.version}};
  out << header.dump() << '\n';
  for (const auto& r : manifest.records) {
    json j = {{"id", r.id},
              {"audio", r.audio},
              {"text", r.text},
              {"duration", r.duration},
              {"sample_rate", r.sample_rate},
              {"speaker", r.speaker ? json(*r.speaker) : json(nullptr)},
              {"split", r.split ? json(std::string(split_name(*r.split))) : json(nullptr)}};
    out << j.dump() << '\n';
  }
}

void write_manifest(const std::filesystem::path& path, const Manifest& manifest) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::kIo, "cannot write manifest " + path.string());
  write_manifest(out, manifest);
  if (!out) throw Error(ErrorKind::kIo, "short write to " + path.string());
}

std::string_view violation_name(ViolationKind kind) {
  switch (kind) {
    case ViolationKind::kMaxDurationExceeded:
      return "MaxDurationExceeded";
    case ViolationKind::kSampleRateMismatch:
      return "SampleRateMismatch";
    case ViolationKind::kEmptyTranscript:
      return "EmptyTranscript";
    case ViolationKind::kMissingAudio:
      return "MissingAudio";
    case ViolationKind::kDuplicateId:
      return "DuplicateId";
    case ViolationKind::kNegativeDuration:
      return "NegativeDuration";
  }
  return "Unknown";
}

std::vector<CorpusViolation> validate(const Manifest& manifest, bool check_audio_files) {
  std::vector<CorpusViolation> out;
  std::set<std::string> seen;
  const textnorm::NormalizationConfig trim{.trim = true};
  for (const auto& r : manifest.records) {
    if (!seen.insert(r.id).second) out.push_back({ViolationKind::kDuplicateId, r.id});
    if (r.duration < 0) out.push_back({ViolationKind::kNegativeDuration, r.id});
    if (r.duration > kMaxUtteranceSeconds)
      out.push_back({ViolationKind::kMaxDurationExceeded, r.id});
    if (r.sample_rate != kSampleRate) out.push_back({ViolationKind::kSampleRateMismatch, r.id});
    if (textnorm::normalize(r.text, trim).empty())
      out.push_back({ViolationKind::kEmptyTranscript, r.id});
    if (check_audio_files && !std::filesystem::is_regular_file(manifest.audio_path(r)))
      out.push_back({ViolationKind::kMissingAudio, r.id});
  }
  return out;
}

const Manifest& SplitResult::operator[](Split s) const {
  switch (s) {
    case Split::kTrain:
      return train;
    case Split::kValidation:
      return validation;
    case Split::kTest:
      return test;
  }
  return train;
}

SplitResult split(const Manifest& manifest, const SplitSpec& spec) {
  if (manifest.records.empty())
    throw Error(ErrorKind::kEmptyCorpus, "cannot split an empty manifest");
  for (double r : spec.ratios)
    if (!(r >= 0)) throw Error(ErrorKind::kInvalidArgument, "split ratios must be non-negative");
  if (std::abs(spec.ratios[0] + spec.ratios[1] + spec.ratios[2] - 1.0) > 1e-9)
    throw Error(ErrorKind::kInvalidArgument, "split ratios must sum to 1");

  // Assignment units: single records, or all records of one speaker.
  struct Unit {
    std::vector<std::size_t> members;
    double duration = 0;
  };
  std::vector<Unit> units;
  if (spec.stratify_by_speaker) {
    std::map<std::string, std::size_t> by_speaker;
    for (std::size_t i = 0; i < manifest.records.size(); ++i) {
      const auto& r = manifest.records[i];
      if (!r.speaker) {
        units.push_back({{i}, r.duration});
        continue;
      }
      auto [it, inserted] = by_speaker.emplace(*r.speaker, units.size());
      if (inserted) units.emplace_back();
      units[it->second].members.push_back(i);
      units[it->second].duration += r.duration;
    }
  } else {
    for (std::size_t i = 0; i < manifest.records.size(); ++i)
      units.push_back({{i}, manifest.records[i].duration});
  }

  std::mt19937_64 rng(spec.seed);
  std::shuffle(units.begin(), units.end(), rng);
  std::stable_sort(units.begin(), units.end(),
                   [](const Unit& a, const Unit& b) { return a.duration > b.duration; });

  const double total = manifest.total_duration();
  std::array<double, 3> assigned{0, 0, 0};
  std::vector<int> assignment(manifest.records.size(), 0);
  for (const auto& u : units) {
    int best = -1;
    double best_deficit = 0;
    for (int s = 0; s < 3; ++s) {
      if (spec.ratios[s] <= 0) continue;
      const double deficit = spec.ratios[s] * total - assigned[s];
      if (best < 0 || deficit > best_deficit) {
        best = s;
        best_deficit = deficit;
      }
    }
    assigned[best] += u.duration;
    for (std::size_t idx : u.members) assignment[idx] = best;
  }

  if (total > 0) {
    for (int s = 0; s < 3; ++s) {
      const double fraction = assigned[s] / total;
      if (std::abs(fraction - spec.ratios[s]) > spec.tolerance) {
        std::ostringstream msg;
        msg << split_name(static_cast<Split>(s)) << " receives " << fraction
            << " of the duration, target " << spec.ratios[s] << " +/- " << spec.tolerance;
        throw Error(ErrorKind::kInfeasibleSplit, msg.str());
      }
    }
  }

  SplitResult out;
  for (Manifest* m : {&out.train, &out.validation, &out.test}) {
    m->header = manifest.header;
    m->base_dir = manifest.base_dir;
  }
  Manifest* targets[3] = {&out.train, &out.validation, &out.test};
  for (std::size_t i = 0; i < manifest.records.size(); ++i) {
    UtteranceRecord r = manifest.records[i];
    r.split = static_cast<Split>(assignment[i]);
    targets[assignment[i]]->records.push_back(std::move(r));
  }
  return out;
}

CorpusStats stats(const Manifest& manifest) {
  CorpusStats s;
  s.utterances = manifest.records.size();
  if (manifest.records.empty()) return s;
  DurationSum total;
  std::map<std::string, DurationSum> speakers, splits;
  s.min_seconds = manifest.records.front().duration;
  s.max_seconds = s.min_seconds;
  for (const auto& r : manifest.records) {
    total.add(r.duration);
    s.min_seconds = std::min(s.min_seconds, r.duration);
    s.max_seconds = std::max(s.max_seconds, r.duration);
    speakers[r.speaker.value_or("(none)")].add(r.duration);
    splits[r.split ? std::string(split_name(*r.split)) : "(unassigned)"].add(r.duration);
  }
  s.total_seconds = total.value();
  s.mean_seconds = s.total_seconds / static_cast<double>(s.utterances);
  for (const auto& [k, v] : speakers) s.per_speaker[k] = v.value();
  for (const auto& [k, v] : splits) s.per_split[k] = v.value();
  return s;
}

std::string format_hms(double seconds) {
  const bool negative = seconds < 0;
  const auto millis = static_cast<long long>(std::llround(std::abs(seconds) * 1000.0));
  const long long whole = millis / 1000;
  const long long frac = millis % 1000;
  std::ostringstream os;
  if (negative) os << '-';
  os << whole / 3600 << ':' << std::setw(2) << std::setfill('0') << (whole / 60) % 60 << ':'
     << std::setw(2) << whole % 60;
  if (frac != 0) {
    std::ostringstream f;
    f << std::setw(3) << std::setfill('0') << frac;
    std::string digits = f.str();
    while (digits.back() == '0') digits.pop_back();
    os << '.' << digits;
  }
  return os.str();
}

void write_stats(std::ostream& os, const CorpusStats& s) {
  os << "utterances     " << s.utterances << '\n'
     << "total          " << format_hms(s.total_seconds) << " (" << s.total_seconds << " s)\n";
  if (s.utterances == 0) return;
  os << "min/mean/max   " << s.min_seconds << " / " << s.mean_seconds << " / " << s.max_seconds
     << " s\n";
  for (const auto& [k, v] : s.per_split)
    os << "split " << k << "  " << format_hms(v) << " (" << v << " s)\n";
  for (const auto& [k, v] : s.per_speaker)
    os << "speaker " << k << "  " << format_hms(v) << " (" << v << " s)\n";
}

Segmentation segment_audio(const std::filesystem::path& audio_file,
                           std::span<const double> boundaries,
                           const std::filesystem::path& out_dir) {
  const wav::Audio audio = wav::read(audio_file);
  const std::size_t n = audio.pcm.size();
  const auto rate = static_cast<std::size_t>(audio.sample_rate);

  std::vector<std::size_t> cuts{0};
  double previous = 0;
  for (double t : boundaries) {
    if (!(t > previous) || !(t < audio.duration()))
      throw Error(ErrorKind::kBadBoundaries,
                  "boundaries must be strictly increasing and inside the audio");
    previous = t;
    const auto cut = static_cast<std::size_t>(std::floor(t * static_cast<double>(rate)));
    if (cut <= cuts.back() || cut >= n)
      throw Error(ErrorKind::kBadBoundaries, "boundary produces an empty segment");
    cuts.push_back(cut);
  }
  cuts.push_back(n);

  const auto max_samples =
      static_cast<std::size_t>(kMaxUtteranceSeconds * static_cast<double>(rate));
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    if (cuts[i + 1] - cuts[i] > max_samples)
      throw Error(ErrorKind::kSegmentTooLong, "segment " + std::to_string(i) + " exceeds " +
                                                  std::to_string(kMaxUtteranceSeconds) + " s");
  }

  std::filesystem::create_directories(out_dir);
  Segmentation seg;
  const std::string stem = audio_file.stem().string();
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    std::ostringstream name;
    name << stem << '_' << std::setw(3) << std::setfill('0') << i;
    wav::Audio piece;
    piece.sample_rate = audio.sample_rate;
    piece.pcm.assign(audio.pcm.begin() + static_cast<std::ptrdiff_t>(cuts[i]),
                     audio.pcm.begin() + static_cast<std::ptrdiff_t>(cuts[i + 1]));
    const auto file = out_dir / (name.str() + ".wav");
    wav::write(file, piece);
    UtteranceRecord r;
    r.id = name.str();
    r.audio = file.filename().string();
    r.duration = piece.duration();
    r.sample_rate = piece.sample_rate;
    seg.files.push_back(file);
    seg.drafts.push_back(std::move(r));
  }
  return seg;
}

}  // namespace lrasr::corpus
