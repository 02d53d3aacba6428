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

// Log-mel frontend.
//
// Frames are centred: the signal is reflect-padded by window_length/2 on each
// side, so T = 1 + floor(N / hop_length) for the default window. Each frame is
// multiplied by a periodic Hann window, zero-padded to fft_size, and
// transformed; the power spectrum goes through a triangular filterbank on the
// Slaney mel scale (linear below 1 kHz, logarithmic above, area-normalised
// filters), is clamped below at log_floor and converted with log10.
//
// 30 s at 16 kHz gives 3001 frames; pad_or_trim(..., 3000) then the encoder's
// stride-2 convolution leaves 1500 positions.

#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

#include "lrasr/tensor.hpp"

namespace lrasr::features {

struct MelConfig {
  int sample_rate = 16000;
  int n_mels = 80;
  int window_length = 400;  // 25 ms
  int hop_length = 160;     // 10 ms
  int fft_size = 400;
  double mel_low = 0.0;
  double mel_high = 8000.0;
  double log_floor = 1e-10;

  // Throws Error(kInvalidArgument) when the invariants do not hold.
  void check() const;
  double floor_value() const;  // log10(log_floor)

  friend bool operator==(const MelConfig&, const MelConfig&) = default;
};

struct MelSpectrogram {
  Matrix<float> values;  // n_mels x frames
  double frame_rate = 100.0;
  double source_duration = 0.0;

  std::size_t frames() const { return values.cols(); }
  std::size_t bins() const { return values.rows(); }
};

double hz_to_mel(double hz);
double mel_to_hz(double mel);

// n_mels x (fft_size/2 + 1) filter weights.
Matrix<double> mel_filterbank(const MelConfig& config);
// Centre frequency (Hz) of every filter.
std::vector<double> mel_center_frequencies(const MelConfig& config);

std::size_t frame_count(std::size_t samples, const MelConfig& config);

// FFT-based frontend; frames are processed in parallel. Throws
// Error(kEmptyAudio) on an empty input.
MelSpectrogram log_mel(std::span<const float> samples, const MelConfig& config = {});

namespace serial {
// Direct O(N^2) DFT on one thread; the reference the FFT path is tested against.
MelSpectrogram log_mel(std::span<const float> samples, const MelConfig& config = {});
}  // namespace serial

// Right-pads with floor frames or truncates to exactly target_frames.
MelSpectrogram pad_or_trim(const MelSpectrogram& mel, std::size_t target_frames,
                           const MelConfig& config = {});

// Per-utterance standardisation to zero mean and unit variance, returned
// time-major (frames x n_mels) as the model consumes it. A constant input maps
// to all zeros.
Matrix<float> standardize(const MelSpectrogram& mel);

// Binary dump: "MELS", u32 version, config block (u32 sample_rate, n_mels,
// window_length, hop_length, fft_size; f64 mel_low, mel_high, log_floor,
// frame_rate, source_duration), u32 frames, then n_mels x frames
// little-endian f32 in row-major order.
void write_mels(std::ostream& out, const MelSpectrogram& mel, const MelConfig& config);
void write_mels(const std::filesystem::path& path, const MelSpectrogram& mel,
                const MelConfig& config);
MelSpectrogram read_mels(std::istream& in, MelConfig* config = nullptr);
MelSpectrogram read_mels(const std::filesystem::path& path, MelConfig* config = nullptr);

}  // namespace lrasr::features
