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

// Synthetic languages with controllable lexical overlap.
//
// A phone is a pure tone; a word is a 2-5 phone sequence spelled with random
// Latin letters. Related languages share a chosen number of entries verbatim
// (same spelling, same phones), so anything a model learns about a shared
// word carries over unchanged.

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "json.hpp"
#include "lrasr/corpus.hpp"

namespace lrasr::synth {

struct Phone {
  std::string symbol;
  double frequency = 0;  // Hz

  friend bool operator==(const Phone&, const Phone&) = default;
};

struct PhoneInventory {
  std::vector<Phone> phones;
  double min_spacing = 120.0;

  // `count` tones evenly spaced over [300, 3000] Hz.
  static PhoneInventory Default(int count = 12);

  // Throws Error(kInvalidArgument) if empty, out of band, or too close.
  void check() const;

  friend bool operator==(const PhoneInventory&, const PhoneInventory&) = default;
};

inline constexpr int kMinWordPhones = 2;
inline constexpr int kMaxWordPhones = 5;

struct Word {
  std::string text;
  std::vector<int> phones;  // indices into the inventory

  friend bool operator==(const Word&, const Word&) = default;
};

struct Lexicon {
  std::string language_tag;
  PhoneInventory inventory;
  std::vector<Word> words;
  std::optional<std::string> parent_tag;
  std::optional<double> overlap_fraction;

  const Word* find(std::string_view text) const;

  nlohmann::json to_json() const;
  static Lexicon from_json(const nlohmann::json& j);
  void save(const std::filesystem::path& path) const;
  static Lexicon load(const std::filesystem::path& path);
};

// `vocab_size` distinct words with distinct phone sequences. Throws
// Error(kExhaustedNamespace) when there are not that many sequences.
Lexicon gen_language(std::uint64_t seed, int vocab_size, const PhoneInventory& inventory,
                     const std::string& tag = {});

// Copies exactly round(overlap * |parent|) parent entries verbatim and
// generates the rest fresh, with spellings and phone sequences that occur
// nowhere in the parent.
Lexicon derive_related(const Lexicon& parent, double overlap, std::uint64_t seed,
                       const std::string& tag = {});

// Number of entries two lexicons share (same text and phones).
std::size_t shared_entries(const Lexicon& a, const Lexicon& b);

struct SynthConfig {
  double phone_duration = 0.1;
  double gap = 0.02;      // between phones of a word
  double word_gap = 0.1;  // between words
  double edge_silence = 0.05;
  double fade = 0.005;
  double amplitude = 0.5;
  int min_words = 3;
  int max_words = 8;
  double noise_snr = 30.0;  // dB
  double punctuation_rate = 0.0;
  std::uint64_t seed = 0;

  // Throws Error(kInvalidArgument), including when the longest possible
  // utterance would exceed 30 s.
  void check() const;
  double max_utterance_seconds() const;

  nlohmann::json to_json() const;
  static SynthConfig from_json(const nlohmann::json& j);
};

inline constexpr std::string_view kPunctuationMarks = ",.?!";

// Joins words with single spaces; each word independently gets one mark from
// {, . ? !} appended with probability `rate`.
std::string inject_punctuation(const std::vector<std::string>& words, double rate,
                               std::mt19937_64& rng);

struct Utterance {
  std::vector<int> words;  // indices into the lexicon
  std::string text;
  std::vector<float> samples;
};

// Utterance `index` of a corpus; a pure function of (lexicon, config, index).
Utterance synth_utterance(const Lexicon& lexicon, const SynthConfig& config, std::size_t index);

// Writes `<out>/audio/<tag>_NNNNN.wav`, `<out>/manifest.jsonl` and
// `<out>/lexicon.json`. `first_index` offsets the utterance sub-seeds so that
// disjoint corpora can be drawn from one configuration.
corpus::Manifest synth_corpus(const Lexicon& lexicon, std::size_t n_utterances,
                              const SynthConfig& config, const std::filesystem::path& out_dir,
                              std::size_t first_index = 0, int jobs = 1);

}  // namespace lrasr::synth
