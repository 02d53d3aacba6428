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

#include "lrasr/synthlang.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <numbers>
#include <set>

#include "lrasr/errors.hpp"
#include "lrasr/wav.hpp"

namespace lrasr::synth {
namespace {

constexpr double kLowHz = 300.0;
constexpr double kHighHz = 3000.0;
constexpr int kMinTextLetters = 2;
constexpr int kMaxTextLetters = 5;

std::mt19937_64 seeded(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32),
                    static_cast<std::uint32_t>(b)};
  return std::mt19937_64(seq);
}

// Distinct phone sequences of length 2..5.
double sequence_space(std::size_t phones) {
  double total = 0;
  for (int len = kMinWordPhones; len <= kMaxWordPhones; ++len)
    total += std::pow(static_cast<double>(phones), len);
  return total;
}

std::vector<int> random_sequence(std::mt19937_64& rng, int phones) {
  std::uniform_int_distribution<int> len(kMinWordPhones, kMaxWordPhones);
  std::uniform_int_distribution<int> pick(0, phones - 1);
  std::vector<int> seq(static_cast<std::size_t>(len(rng)));
  for (auto& p : seq) p = pick(rng);
  return seq;
}

std::string random_text(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> len(kMinTextLetters, kMaxTextLetters);
  std::uniform_int_distribution<int> letter(0, 25);
  std::string s(static_cast<std::size_t>(len(rng)), 'a');
  for (auto& c : s) c = static_cast<char>('a' + letter(rng));
  return s;
}

// Appends `count` words whose text and phones are absent from the taken sets.
void fill_fresh(std::vector<Word>& out, std::size_t count, std::mt19937_64& rng,
                const PhoneInventory& inv, std::set<std::string>& texts,
                std::set<std::vector<int>>& sequences) {
  const double space = sequence_space(inv.phones.size());
  if (static_cast<double>(sequences.size() + count) > space)
    throw Error(ErrorKind::kExhaustedNamespace,
                "only " + std::to_string(static_cast<long long>(space)) +
                    " distinct phone sequences exist for this inventory");
  const int phones = static_cast<int>(inv.phones.size());
  for (std::size_t i = 0; i < count; ++i) {
    std::vector<int> seq;
    do seq = random_sequence(rng, phones);
    while (!sequences.insert(seq).second);
    std::string text;
    do text = random_text(rng);
    while (!texts.insert(text).second);
    out.push_back({std::move(text), std::move(seq)});
  }
}

std::string default_tag(const char* prefix, std::uint64_t seed) {
  return std::string(prefix) + std::to_string(seed);
}

}  // namespace

PhoneInventory PhoneInventory::Default(int count) {
  if (count < 1) throw Error(ErrorKind::kInvalidArgument, "inventory needs at least one phone");
  PhoneInventory inv;
  for (int i = 0; i < count; ++i) {
    const double f = count == 1 ? kLowHz : kLowHz + (kHighHz - kLowHz) * i / (count - 1);
    char sym[16];
    std::snprintf(sym, sizeof(sym), "q%02d", i);
    inv.phones.push_back({sym, f});
  }
  inv.check();
  return inv;
}

void PhoneInventory::check() const {
  if (phones.empty()) throw Error(ErrorKind::kInvalidArgument, "empty phone inventory");
  if (min_spacing < 120.0) throw Error(ErrorKind::kInvalidArgument, "min_spacing below 120 Hz");
  std::set<std::string> symbols;
  for (std::size_t i = 0; i < phones.size(); ++i) {
    const double f = phones[i].frequency;
    if (!(f >= kLowHz && f <= kHighHz))
      throw Error(ErrorKind::kInvalidArgument, "phone frequency outside [300, 3000] Hz");
    if (!symbols.insert(phones[i].symbol).second)
      throw Error(ErrorKind::kInvalidArgument, "duplicate phone symbol " + phones[i].symbol);
    for (std::size_t j = 0; j < i; ++j)
      if (std::abs(f - phones[j].frequency) < min_spacing)
        throw Error(ErrorKind::kInvalidArgument,
                    "phones " + phones[j].symbol + " and " + phones[i].symbol + " are too close");
  }
}

const Word* Lexicon::find(std::string_view text) const {
  for (const auto& w : words)
    if (w.text == text) return &w;
  return nullptr;
}

nlohmann::json Lexicon::to_json() const {
  nlohmann::json j;
  j["language_tag"] = language_tag;
  auto phones = nlohmann::json::array();
  for (const auto& p : inventory.phones)
    phones.push_back({{"symbol", p.symbol}, {"hz", p.frequency}});
  j["inventory"] = {{"phones", phones}, {"min_spacing", inventory.min_spacing}};
  auto ws = nlohmann::json::array();
  for (const auto& w : words) ws.push_back({{"text", w.text}, {"phones", w.phones}});
  j["words"] = ws;
  j["parent_tag"] = parent_tag ? nlohmann::json(*parent_tag) : nlohmann::json(nullptr);
  j["overlap_fraction"] =
      overlap_fraction ? nlohmann::json(*overlap_fraction) : nlohmann::json(nullptr);
  return j;
}

Lexicon Lexicon::from_json(const nlohmann::json& j) {
  try {
    Lexicon lex;
    lex.language_tag = j.at("language_tag").get<std::string>();
    for (const auto& p : j.at("inventory").at("phones"))
      lex.inventory.phones.push_back({p.at("symbol").get<std::string>(), p.at("hz").get<double>()});
    lex.inventory.min_spacing = j.at("inventory").at("min_spacing").get<double>();
    lex.inventory.check();
    std::set<std::string> texts;
    for (const auto& w : j.at("words")) {
      Word word{w.at("text").get<std::string>(), w.at("phones").get<std::vector<int>>()};
      if (!texts.insert(word.text).second)
        throw Error(ErrorKind::kParse, "duplicate word '" + word.text + "'");
      for (int p : word.phones)
        if (p < 0 || p >= static_cast<int>(lex.inventory.phones.size()))
          throw Error(ErrorKind::kParse, "word '" + word.text + "' uses an unknown phone");
      lex.words.push_back(std::move(word));
    }
    if (j.contains("parent_tag") && !j["parent_tag"].is_null())
      lex.parent_tag = j["parent_tag"].get<std::string>();
    if (j.contains("overlap_fraction") && !j["overlap_fraction"].is_null())
      lex.overlap_fraction = j["overlap_fraction"].get<double>();
    return lex;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kParse, std::string("lexicon: ") + e.what());
  }
}

void Lexicon::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::kIo, "cannot write " + path.string());
  out << to_json().dump(1) << '\n';
}

Lexicon Lexicon::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, "cannot read " + path.string());
  try {
    return from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kParse, path.string() + ": " + e.what());
  }
}

Lexicon gen_language(std::uint64_t seed, int vocab_size, const PhoneInventory& inventory,
                     const std::string& tag) {
  if (vocab_size < 1) throw Error(ErrorKind::kInvalidArgument, "vocab_size must be positive");
  inventory.check();
  Lexicon lex;
  lex.language_tag = tag.empty() ? default_tag("syn", seed) : tag;
  lex.inventory = inventory;
  auto rng = seeded(seed, 0x1e71c0);
  std::set<std::string> texts;
  std::set<std::vector<int>> sequences;
  fill_fresh(lex.words, static_cast<std::size_t>(vocab_size), rng, inventory, texts, sequences);
  return lex;
}

Lexicon derive_related(const Lexicon& parent, double overlap, std::uint64_t seed,
                       const std::string& tag) {
  if (!(overlap >= 0.0 && overlap <= 1.0))
    throw Error(ErrorKind::kInvalidArgument, "overlap must lie in [0, 1]");
  const std::size_t n = parent.words.size();
  const auto shared = static_cast<std::size_t>(std::lround(overlap * static_cast<double>(n)));

  Lexicon lex;
  lex.language_tag = tag.empty() ? default_tag("rel", seed) : tag;
  lex.inventory = parent.inventory;
  lex.parent_tag = parent.language_tag;
  lex.overlap_fraction = overlap;

  auto rng = seeded(seed, 0xde71e0);
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::shuffle(order.begin(), order.end(), rng);
  std::sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(shared));
  for (std::size_t i = 0; i < shared; ++i) lex.words.push_back(parent.words[order[i]]);

  std::set<std::string> texts;
  std::set<std::vector<int>> sequences;
  for (const auto& w : parent.words) {
    texts.insert(w.text);
    sequences.insert(w.phones);
  }
  fill_fresh(lex.words, n - shared, rng, lex.inventory, texts, sequences);
  return lex;
}

std::size_t shared_entries(const Lexicon& a, const Lexicon& b) {
  std::set<std::pair<std::string, std::vector<int>>> sa;
  for (const auto& w : a.words) sa.insert({w.text, w.phones});
  std::size_t count = 0;
  for (const auto& w : b.words) count += sa.count({w.text, w.phones});
  return count;
}

// --- audio -----------------------------------------------------------------

double SynthConfig::max_utterance_seconds() const {
  const double word = kMaxWordPhones * phone_duration + (kMaxWordPhones - 1) * gap;
  return 2 * edge_silence + max_words * word + (max_words - 1) * word_gap;
}

void SynthConfig::check() const {
  auto fail = [](const std::string& m) { throw Error(ErrorKind::kInvalidArgument, m); };
  if (!(phone_duration > 0)) fail("phone_duration must be positive");
  if (gap < 0 || word_gap < 0 || edge_silence < 0) fail("silences must be non-negative");
  if (fade < 0 || 2 * fade > phone_duration) fail("fade must fit twice into a phone");
  if (!(amplitude > 0 && amplitude < 1)) fail("amplitude must lie in (0, 1)");
  if (min_words < 1 || max_words < min_words) fail("bad utterance word range");
  if (std::isnan(noise_snr) || noise_snr == -INFINITY) fail("noise_snr must be a number or +inf");
  if (!(punctuation_rate >= 0 && punctuation_rate <= 1))
    fail("punctuation_rate must lie in [0, 1]");
  if (max_utterance_seconds() > corpus::kMaxUtteranceSeconds)
    fail("longest possible utterance exceeds 30 s");
}

nlohmann::json SynthConfig::to_json() const {
  return {{"phone_duration", phone_duration},
          {"gap", gap},
          {"word_gap", word_gap},
          {"edge_silence", edge_silence},
          {"fade", fade},
          {"amplitude", amplitude},
          {"min_words", min_words},
          {"max_words", max_words},
          {"noise_snr", noise_snr},
          {"punctuation_rate", punctuation_rate},
          {"seed", seed}};
}

SynthConfig SynthConfig::from_json(const nlohmann::json& j) {
  try {
    SynthConfig c;
    c.phone_duration = j.value("phone_duration", c.phone_duration);
    c.gap = j.value("gap", c.gap);
    c.word_gap = j.value("word_gap", c.word_gap);
    c.edge_silence = j.value("edge_silence", c.edge_silence);
    c.fade = j.value("fade", c.fade);
    c.amplitude = j.value("amplitude", c.amplitude);
    c.min_words = j.value("min_words", c.min_words);
    c.max_words = j.value("max_words", c.max_words);
    c.noise_snr = j.value("noise_snr", c.noise_snr);
    c.punctuation_rate = j.value("punctuation_rate", c.punctuation_rate);
    c.seed = j.value("seed", c.seed);
    c.check();
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kParse, std::string("synth config: ") + e.what());
  }
}

std::string inject_punctuation(const std::vector<std::string>& words, double rate,
                               std::mt19937_64& rng) {
  std::bernoulli_distribution mark(rate);
  std::uniform_int_distribution<std::size_t> which(0, kPunctuationMarks.size() - 1);
  std::string out;
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (i) out += ' ';
    out += words[i];
    if (rate > 0 && mark(rng)) out += kPunctuationMarks[which(rng)];
  }
  return out;
}

Utterance synth_utterance(const Lexicon& lexicon, const SynthConfig& config, std::size_t index) {
  if (lexicon.words.empty()) throw Error(ErrorKind::kInvalidArgument, "empty lexicon");
  auto word_rng = seeded(config.seed, index, 0);
  auto punct_rng = seeded(config.seed, index, 1);
  auto noise_rng = seeded(config.seed, index, 2);

  Utterance u;
  std::uniform_int_distribution<int> count(config.min_words, config.max_words);
  std::uniform_int_distribution<int> pick(0, static_cast<int>(lexicon.words.size()) - 1);
  const int n = count(word_rng);
  std::vector<std::string> texts;
  for (int i = 0; i < n; ++i) {
    u.words.push_back(pick(word_rng));
    texts.push_back(lexicon.words[static_cast<std::size_t>(u.words.back())].text);
  }
  u.text = inject_punctuation(texts, config.punctuation_rate, punct_rng);

  const double rate = corpus::kSampleRate;
  auto samples_of = [&](double seconds) {
    return static_cast<std::size_t>(std::lround(seconds * rate));
  };
  const std::size_t phone_len = samples_of(config.phone_duration);
  const std::size_t fade_len = samples_of(config.fade);
  std::vector<float>& s = u.samples;
  s.assign(samples_of(config.edge_silence), 0.0f);
  for (int w = 0; w < n; ++w) {
    if (w) s.resize(s.size() + samples_of(config.word_gap), 0.0f);
    const auto& phones =
        lexicon.words[static_cast<std::size_t>(u.words[static_cast<std::size_t>(w)])].phones;
    for (std::size_t p = 0; p < phones.size(); ++p) {
      if (p) s.resize(s.size() + samples_of(config.gap), 0.0f);
      const double hz = lexicon.inventory.phones[static_cast<std::size_t>(phones[p])].frequency;
      for (std::size_t i = 0; i < phone_len; ++i) {
        double env = 1.0;
        if (fade_len > 0) {
          if (i < fade_len)
            env = 0.5 - 0.5 * std::cos(std::numbers::pi * static_cast<double>(i) / fade_len);
          else if (i >= phone_len - fade_len)
            env = 0.5 - 0.5 * std::cos(std::numbers::pi * static_cast<double>(phone_len - 1 - i) /
                                       fade_len);
        }
        s.push_back(static_cast<float>(
            config.amplitude * env *
            std::sin(2.0 * std::numbers::pi * hz * static_cast<double>(i) / rate)));
      }
    }
  }
  s.resize(s.size() + samples_of(config.edge_silence), 0.0f);

  if (std::isfinite(config.noise_snr)) {
    double power = 0;
    for (float v : s) power += static_cast<double>(v) * v;
    power /= static_cast<double>(s.size());
    const double sd = std::sqrt(power / std::pow(10.0, config.noise_snr / 10.0));
    std::normal_distribution<double> noise(0.0, sd);
    for (auto& v : s) v = static_cast<float>(std::clamp(v + noise(noise_rng), -1.0, 1.0));
  }
  return u;
}

corpus::Manifest synth_corpus(const Lexicon& lexicon, std::size_t n_utterances,
                              const SynthConfig& config, const std::filesystem::path& out_dir,
                              std::size_t first_index, int jobs) {
  config.check();
  lexicon.inventory.check();
  if (lexicon.words.empty()) throw Error(ErrorKind::kInvalidArgument, "empty lexicon");
  std::error_code ec;
  std::filesystem::create_directories(out_dir / "audio", ec);
  if (ec) throw Error(ErrorKind::kIo, "cannot create " + (out_dir / "audio").string());

  corpus::Manifest m;
  m.header.language = lexicon.language_tag;
  m.header.script = "Latn";
  m.base_dir = out_dir;
  m.records.resize(n_utterances);
  std::vector<std::exception_ptr> errors(n_utterances);
#pragma omp parallel for schedule(dynamic, 4) num_threads(jobs > 0 ? jobs : 1) if (jobs > 1)
  for (std::size_t i = 0; i < n_utterances; ++i) {
    try {
      const std::size_t index = first_index + i;
      const auto u = synth_utterance(lexicon, config, index);
      char name[64];
      std::snprintf(name, sizeof(name), "%05zu", index);
      const std::string id = lexicon.language_tag + "_" + name;
      const std::string rel = "audio/" + id + ".wav";
      const auto audio = wav::Audio::from_float(u.samples, corpus::kSampleRate);
      wav::write(out_dir / rel, audio);
      auto& r = m.records[i];
      r.id = id;
      r.audio = rel;
      r.text = u.text;
      r.duration = audio.duration();
      r.sample_rate = corpus::kSampleRate;
      r.speaker = "synth";
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  corpus::write_manifest(out_dir / "manifest.jsonl", m);
  lexicon.save(out_dir / "lexicon.json");
  return m;
}

}  // namespace lrasr::synth
