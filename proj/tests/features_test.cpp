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

#include "lrasr/features.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "doctest.h"
#include "test_util.hpp"

namespace f = lrasr::features;
using lrasr::ErrorKind;

namespace {

std::vector<float> sine(double hz, double seconds, double amplitude = 1.0, int rate = 16000) {
  std::vector<float> s(static_cast<std::size_t>(seconds * rate));
  for (std::size_t i = 0; i < s.size(); ++i)
    s[i] = static_cast<float>(amplitude * std::sin(2.0 * std::numbers::pi * hz * double(i) / rate));
  return s;
}

// Slaney mel scale written out from its definition: linear 200/3 Hz per mel
// below 1 kHz, logarithmic with step ln(6.4)/27 above.
double slaney_mel(double hz) {
  if (hz < 1000.0) return hz / (200.0 / 3.0);
  return 15.0 + std::log(hz / 1000.0) / (std::log(6.4) / 27.0);
}

}  // namespace

TEST_CASE("mel scale") {
  for (double hz : {0.0, 200.0, 999.0, 1000.0, 2500.0, 8000.0}) {
    CHECK(f::hz_to_mel(hz) == doctest::Approx(slaney_mel(hz)).epsilon(1e-12));
    CHECK(f::mel_to_hz(f::hz_to_mel(hz)) == doctest::Approx(hz).epsilon(1e-12));
  }
  const auto centers = f::mel_center_frequencies({});
  REQUIRE(centers.size() == 80);
  // Centres are evenly spaced in mel between the band edges.
  const double step = (slaney_mel(8000.0) - slaney_mel(0.0)) / 81.0;
  for (std::size_t i = 0; i < centers.size(); ++i)
    CHECK(slaney_mel(centers[i]) == doctest::Approx(step * double(i + 1)).epsilon(1e-9));
}

TEST_CASE("filterbank shape") {
  const auto fb = f::mel_filterbank({});
  CHECK(fb.rows() == 80);
  CHECK(fb.cols() == 201);
  for (std::size_t r = 0; r < fb.rows(); ++r) {
    double sum = 0;
    for (std::size_t c = 0; c < fb.cols(); ++c) {
      CHECK(fb(r, c) >= 0.0);
      sum += fb(r, c);
    }
    CHECK(sum > 0.0);
  }
}

TEST_CASE("frame count formula") {
  const f::MelConfig cfg;
  CHECK(f::frame_count(16000 * 30, cfg) == 3001);
  CHECK(f::frame_count(16000, cfg) == 101);
  std::mt19937 rng(4);
  for (int i = 0; i < 50; ++i) {
    const std::size_t n = 200 + rng() % 40000;
    const std::size_t padded = n + 2 * (cfg.window_length / 2);
    const std::size_t expected = 1 + (padded - cfg.window_length) / cfg.hop_length;
    CHECK(f::frame_count(n, cfg) == expected);
    std::vector<float> x(n, 0.0f);
    CHECK(f::log_mel(x, cfg).frames() == expected);
  }
}

TEST_CASE("silence maps to the floor exactly") {
  const f::MelConfig cfg;
  const std::vector<float> zeros(16000, 0.0f);
  const auto mel = f::log_mel(zeros, cfg);
  const float floor = static_cast<float>(std::log10(cfg.log_floor));
  for (float v : mel.values.flat()) CHECK(v == floor);
  CHECK(mel.source_duration == 1.0);
  CHECK(mel.frame_rate == 100.0);
}

TEST_CASE("a 1 kHz tone peaks in the bin centred nearest 1 kHz") {
  const f::MelConfig cfg;
  const auto mel = f::log_mel(sine(1000.0, 1.0), cfg);
  const auto centers = f::mel_center_frequencies(cfg);
  std::size_t nearest = 0;
  for (std::size_t i = 1; i < centers.size(); ++i)
    if (std::abs(centers[i] - 1000.0) < std::abs(centers[nearest] - 1000.0)) nearest = i;
  // The first and last frames are centred on the signal edge, where reflect
  // padding mirrors the sine with inverted phase; they may land one bin off.
  for (std::size_t t = 0; t < mel.frames(); ++t) {
    std::size_t best = 0;
    for (std::size_t b = 1; b < mel.bins(); ++b)
      if (mel.values(b, t) > mel.values(best, t)) best = b;
    const bool edge = t == 0 || t + 1 == mel.frames();
    if (edge)
      CHECK(std::abs(static_cast<int>(best) - static_cast<int>(nearest)) <= 1);
    else
      CHECK(best == nearest);
  }
}

TEST_CASE("30 s of audio gives 3001 frames and 3000 after pad_or_trim") {
  const std::vector<float> x(480000, 0.0f);
  const auto mel = f::log_mel(x);
  CHECK(mel.frames() == 3001);
  CHECK(f::pad_or_trim(mel, 3000).frames() == 3000);
}

TEST_CASE("pad_or_trim") {
  const f::MelConfig cfg;
  std::mt19937 rng(2);
  std::normal_distribution<float> n(0.0f, 0.1f);
  std::vector<float> x(160 * 99);
  for (auto& v : x) v = n(rng);
  const auto mel = f::log_mel(x, cfg);
  REQUIRE(mel.frames() == 100);
  const auto padded = f::pad_or_trim(mel, 120, cfg);
  CHECK(padded.frames() == 120);
  for (std::size_t b = 0; b < 80; ++b) {
    for (std::size_t t = 0; t < 100; ++t) CHECK(padded.values(b, t) == mel.values(b, t));
    for (std::size_t t = 100; t < 120; ++t)
      CHECK(padded.values(b, t) == static_cast<float>(cfg.floor_value()));
  }
  CHECK(f::pad_or_trim(padded, 120, cfg).values == padded.values);
  const auto cut = f::pad_or_trim(f::pad_or_trim(mel, 150, cfg), 120, cfg);
  CHECK(cut.values == padded.values);
}

TEST_CASE("FFT path matches the direct-DFT reference") {
  std::mt19937 rng(12);
  std::normal_distribution<float> n(0.0f, 0.3f);
  std::vector<float> x(16000);
  for (auto& v : x) v = n(rng);
  const auto fast = f::log_mel(x);
  const auto slow = f::serial::log_mel(x);
  REQUIRE(fast.values.same_shape(slow.values));
  for (std::size_t i = 0; i < fast.values.size(); ++i)
    CHECK(fast.values.data()[i] == doctest::Approx(slow.values.data()[i]).epsilon(1e-4));
}

TEST_CASE("scaling the waveform up never lowers a mel value") {
  std::mt19937 rng(21);
  std::normal_distribution<float> n(0.0f, 0.05f);
  for (int trial = 0; trial < 5; ++trial) {
    std::vector<float> x(8000);
    for (auto& v : x) v = n(rng);
    const float c = 1.5f + static_cast<float>(trial);
    std::vector<float> y(x);
    for (auto& v : y) v *= c;
    const auto a = f::log_mel(x), b = f::log_mel(y);
    for (std::size_t i = 0; i < a.values.size(); ++i)
      CHECK(b.values.data()[i] >= a.values.data()[i]);
  }
}

TEST_CASE("determinism, errors and config checks") {
  const auto x = sine(440.0, 0.5, 0.3);
  CHECK(f::log_mel(x).values == f::log_mel(x).values);
  CHECK_THROWS_KIND(f::log_mel(std::vector<float>{}), ErrorKind::kEmptyAudio);
  f::MelConfig bad;
  bad.mel_high = 9000;
  CHECK_THROWS_KIND(bad.check(), ErrorKind::kInvalidArgument);
  bad = {};
  bad.hop_length = 500;
  CHECK_THROWS_KIND(bad.check(), ErrorKind::kInvalidArgument);
}

TEST_CASE("standardize") {
  const auto mel = f::log_mel(sine(700.0, 0.5, 0.5));
  const auto z = f::standardize(mel);
  CHECK(z.rows() == mel.frames());
  CHECK(z.cols() == 80);
  double mean = 0, sq = 0;
  for (float v : z.flat()) mean += v;
  mean /= double(z.size());
  for (float v : z.flat()) sq += (v - mean) * (v - mean);
  CHECK(mean == doctest::Approx(0.0).epsilon(1e-5).scale(1.0));
  CHECK(sq / double(z.size()) == doctest::Approx(1.0).epsilon(1e-4));
  const auto flat = f::standardize(f::log_mel(std::vector<float>(4000, 0.0f)));
  for (float v : flat.flat()) CHECK(v == 0.0f);
}

TEST_CASE("MELS dump round trip") {
  f::MelConfig cfg;
  const auto mel = f::log_mel(sine(300.0, 0.3, 0.2), cfg);
  std::stringstream ss;
  f::write_mels(ss, mel, cfg);
  CHECK(ss.str().substr(0, 4) == "MELS");
  f::MelConfig back_cfg;
  back_cfg.n_mels = 1;
  const auto back = f::read_mels(ss, &back_cfg);
  CHECK(back.values == mel.values);
  CHECK(back.source_duration == mel.source_duration);
  CHECK(back_cfg == cfg);
  std::istringstream junk("MELX....");
  CHECK_THROWS_KIND(f::read_mels(junk), ErrorKind::kParse);
}
