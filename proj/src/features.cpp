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

#include <fftw3.h>
#include <omp.h>

#include <cmath>
#include <complex>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>

#include "lrasr/binary_io.hpp"
#include "lrasr/errors.hpp"

namespace lrasr::features {
namespace {

constexpr std::uint32_t kMelsVersion = 1;

// Slaney mel scale.
constexpr double kLinearHzPerMel = 200.0 / 3.0;
constexpr double kBreakHz = 1000.0;
constexpr double kBreakMel = kBreakHz / kLinearHzPerMel;  // 15
const double kLogStep = std::log(6.4) / 27.0;

std::vector<double> hann(int length) {
  std::vector<double> w(static_cast<std::size_t>(length));
  for (int n = 0; n < length; ++n)
    w[static_cast<std::size_t>(n)] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * n / length);
  return w;
}

// numpy-style "reflect" (edge sample not repeated).
std::size_t reflect_index(std::ptrdiff_t i, std::ptrdiff_t n) {
  if (n == 1) return 0;
  const std::ptrdiff_t period = 2 * (n - 1);
  i %= period;
  if (i < 0) i += period;
  return static_cast<std::size_t>(i < n ? i : period - i);
}

// Windowed frame t, zero-padded to fft_size.
void load_frame(std::span<const float> samples, const MelConfig& cfg,
                const std::vector<double>& window, std::size_t t, double* out) {
  const auto n = static_cast<std::ptrdiff_t>(samples.size());
  const std::ptrdiff_t start =
      static_cast<std::ptrdiff_t>(t) * cfg.hop_length - cfg.window_length / 2;
  const int offset = (cfg.fft_size - cfg.window_length) / 2;
  for (int k = 0; k < cfg.fft_size; ++k) out[k] = 0.0;
  for (int k = 0; k < cfg.window_length; ++k) {
    const double x = samples[reflect_index(start + k, n)];
    out[offset + k] = x * window[static_cast<std::size_t>(k)];
  }
}

void mel_from_power(const Matrix<double>& fb, const double* power, const MelConfig& cfg,
                    Matrix<float>& values, std::size_t t) {
  const std::size_t bins = fb.cols();
  for (std::size_t m = 0; m < fb.rows(); ++m) {
    const double* w = fb.data() + m * bins;
    double e = 0.0;
    for (std::size_t k = 0; k < bins; ++k) e += w[k] * power[k];
    values(m, t) = static_cast<float>(std::log10(std::max(e, cfg.log_floor)));
  }
}

MelSpectrogram empty_spectrogram(std::span<const float> samples, const MelConfig& cfg) {
  cfg.check();
  if (samples.empty()) throw Error(ErrorKind::kEmptyAudio, "no samples");
  MelSpectrogram mel;
  mel.values.resize(static_cast<std::size_t>(cfg.n_mels), frame_count(samples.size(), cfg));
  mel.frame_rate = static_cast<double>(cfg.sample_rate) / cfg.hop_length;
  mel.source_duration = static_cast<double>(samples.size()) / cfg.sample_rate;
  return mel;
}

struct PlanDeleter {
  void operator()(fftw_plan_s* p) const { fftw_destroy_plan(p); }
};

// FFTW planning is not thread-safe; plans are built once per size under a
// lock and then executed concurrently with the new-array interface.
fftw_plan real_plan(int n) {
  static std::mutex mu;
  static std::map<int, std::unique_ptr<fftw_plan_s, PlanDeleter>> plans;
  std::lock_guard lock(mu);
  auto& slot = plans[n];
  if (!slot) {
    std::vector<double> in(static_cast<std::size_t>(n));
    std::vector<fftw_complex> out(static_cast<std::size_t>(n / 2 + 1));
    slot.reset(fftw_plan_dft_r2c_1d(n, in.data(), out.data(),
                                    FFTW_ESTIMATE | FFTW_UNALIGNED | FFTW_PRESERVE_INPUT));
  }
  return slot.get();
}

}  // namespace

void MelConfig::check() const {
  if (sample_rate <= 0 || n_mels <= 0 || window_length <= 0 || hop_length <= 0 || fft_size <= 0)
    throw Error(ErrorKind::kInvalidArgument, "mel config sizes must be positive");
  if (!(hop_length <= window_length && window_length <= fft_size))
    throw Error(ErrorKind::kInvalidArgument, "need hop_length <= window_length <= fft_size");
  if (!(mel_low >= 0 && mel_low < mel_high && mel_high <= sample_rate / 2.0))
    throw Error(ErrorKind::kInvalidArgument, "need 0 <= mel_low < mel_high <= sample_rate/2");
  if (!(log_floor > 0)) throw Error(ErrorKind::kInvalidArgument, "log_floor must be positive");
}

double MelConfig::floor_value() const {
  return static_cast<double>(static_cast<float>(std::log10(log_floor)));
}

double hz_to_mel(double hz) {
  if (hz < kBreakHz) return hz / kLinearHzPerMel;
  return kBreakMel + std::log(hz / kBreakHz) / kLogStep;
}

double mel_to_hz(double mel) {
  if (mel < kBreakMel) return mel * kLinearHzPerMel;
  return kBreakHz * std::exp(kLogStep * (mel - kBreakMel));
}

std::vector<double> mel_center_frequencies(const MelConfig& cfg) {
  const double lo = hz_to_mel(cfg.mel_low), hi = hz_to_mel(cfg.mel_high);
  std::vector<double> centers(static_cast<std::size_t>(cfg.n_mels));
  for (int m = 0; m < cfg.n_mels; ++m)
    centers[static_cast<std::size_t>(m)] = mel_to_hz(lo + (hi - lo) * (m + 1) / (cfg.n_mels + 1));
  return centers;
}

Matrix<double> mel_filterbank(const MelConfig& cfg) {
  cfg.check();
  const std::size_t bins = static_cast<std::size_t>(cfg.fft_size / 2 + 1);
  const double lo = hz_to_mel(cfg.mel_low), hi = hz_to_mel(cfg.mel_high);
  std::vector<double> edges(static_cast<std::size_t>(cfg.n_mels + 2));
  for (std::size_t i = 0; i < edges.size(); ++i)
    edges[i] = mel_to_hz(lo + (hi - lo) * static_cast<double>(i) / (cfg.n_mels + 1));

  Matrix<double> fb(static_cast<std::size_t>(cfg.n_mels), bins);
  for (std::size_t m = 0; m < fb.rows(); ++m) {
    const double left = edges[m], centre = edges[m + 1], right = edges[m + 2];
    const double norm = 2.0 / (right - left);
    for (std::size_t k = 0; k < bins; ++k) {
      const double f = static_cast<double>(k) * cfg.sample_rate / cfg.fft_size;
      const double rise = (f - left) / (centre - left);
      const double fall = (right - f) / (right - centre);
      fb(m, k) = norm * std::max(0.0, std::min(rise, fall));
    }
  }
  return fb;
}

std::size_t frame_count(std::size_t samples, const MelConfig& cfg) {
  const std::size_t padded = samples + 2 * static_cast<std::size_t>(cfg.window_length / 2);
  return 1 + (padded - static_cast<std::size_t>(cfg.window_length)) /
                 static_cast<std::size_t>(cfg.hop_length);
}

MelSpectrogram log_mel(std::span<const float> samples, const MelConfig& cfg) {
  MelSpectrogram mel = empty_spectrogram(samples, cfg);
  const Matrix<double> fb = mel_filterbank(cfg);
  const std::vector<double> window = hann(cfg.window_length);
  const fftw_plan plan = real_plan(cfg.fft_size);
  const std::size_t bins = fb.cols();
  const auto frames = static_cast<std::ptrdiff_t>(mel.frames());

#pragma omp parallel if (frames > 64 && !omp_in_parallel())
  {
    std::vector<double> frame(static_cast<std::size_t>(cfg.fft_size));
    std::vector<fftw_complex> spectrum(bins);
    std::vector<double> power(bins);
#pragma omp for schedule(static)
    for (std::ptrdiff_t t = 0; t < frames; ++t) {
      load_frame(samples, cfg, window, static_cast<std::size_t>(t), frame.data());
      fftw_execute_dft_r2c(plan, frame.data(), spectrum.data());
      for (std::size_t k = 0; k < bins; ++k)
        power[k] = spectrum[k][0] * spectrum[k][0] + spectrum[k][1] * spectrum[k][1];
      mel_from_power(fb, power.data(), cfg, mel.values, static_cast<std::size_t>(t));
    }
  }
  return mel;
}

namespace serial {

MelSpectrogram log_mel(std::span<const float> samples, const MelConfig& cfg) {
  MelSpectrogram mel = empty_spectrogram(samples, cfg);
  const Matrix<double> fb = mel_filterbank(cfg);
  const std::vector<double> window = hann(cfg.window_length);
  const std::size_t bins = fb.cols();
  std::vector<double> frame(static_cast<std::size_t>(cfg.fft_size));
  std::vector<double> power(bins);
  for (std::size_t t = 0; t < mel.frames(); ++t) {
    load_frame(samples, cfg, window, t, frame.data());
    for (std::size_t k = 0; k < bins; ++k) {
      double re = 0.0, im = 0.0;
      for (int n = 0; n < cfg.fft_size; ++n) {
        const double angle = -2.0 * std::numbers::pi * static_cast<double>(k) * n / cfg.fft_size;
        re += frame[static_cast<std::size_t>(n)] * std::cos(angle);
        im += frame[static_cast<std::size_t>(n)] * std::sin(angle);
      }
      power[k] = re * re + im * im;
    }
    mel_from_power(fb, power.data(), cfg, mel.values, t);
  }
  return mel;
}

}  // namespace serial

MelSpectrogram pad_or_trim(const MelSpectrogram& mel, std::size_t target_frames,
                           const MelConfig& cfg) {
  if (target_frames == 0)
    throw Error(ErrorKind::kInvalidArgument, "target_frames must be at least 1");
  MelSpectrogram out;
  out.frame_rate = mel.frame_rate;
  out.source_duration = mel.source_duration;
  out.values.resize(mel.bins(), target_frames, static_cast<float>(cfg.floor_value()));
  const std::size_t keep = std::min(target_frames, mel.frames());
  for (std::size_t m = 0; m < mel.bins(); ++m)
    for (std::size_t t = 0; t < keep; ++t) out.values(m, t) = mel.values(m, t);
  return out;
}

Matrix<float> standardize(const MelSpectrogram& mel) {
  const std::size_t n = mel.values.size();
  double mean = 0.0;
  for (float v : mel.values.flat()) mean += v;
  mean /= static_cast<double>(std::max<std::size_t>(n, 1));
  double var = 0.0;
  for (float v : mel.values.flat()) var += (v - mean) * (v - mean);
  var /= static_cast<double>(std::max<std::size_t>(n, 1));
  const double scale = var > 1e-12 ? 1.0 / std::sqrt(var) : 0.0;

  Matrix<float> out(mel.frames(), mel.bins());
  for (std::size_t m = 0; m < mel.bins(); ++m)
    for (std::size_t t = 0; t < mel.frames(); ++t)
      out(t, m) = static_cast<float>((mel.values(m, t) - mean) * scale);
  return out;
}

void write_mels(std::ostream& out, const MelSpectrogram& mel, const MelConfig& cfg) {
  out.write("MELS", 4);
  binary::put_u32(out, kMelsVersion);
  binary::put_u32(out, static_cast<std::uint32_t>(cfg.sample_rate));
  binary::put_u32(out, static_cast<std::uint32_t>(cfg.n_mels));
  binary::put_u32(out, static_cast<std::uint32_t>(cfg.window_length));
  binary::put_u32(out, static_cast<std::uint32_t>(cfg.hop_length));
  binary::put_u32(out, static_cast<std::uint32_t>(cfg.fft_size));
  binary::put_f64(out, cfg.mel_low);
  binary::put_f64(out, cfg.mel_high);
  binary::put_f64(out, cfg.log_floor);
  binary::put_f64(out, mel.frame_rate);
  binary::put_f64(out, mel.source_duration);
  binary::put_u32(out, static_cast<std::uint32_t>(mel.frames()));
  for (float v : mel.values.flat()) binary::put_f32(out, v);
}

void write_mels(const std::filesystem::path& path, const MelSpectrogram& mel,
                const MelConfig& cfg) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::kIo, "cannot write " + path.string());
  write_mels(out, mel, cfg);
}

MelSpectrogram read_mels(std::istream& in, MelConfig* config) {
  binary::expect_magic(in, "MELS");
  if (binary::get_u32(in) != kMelsVersion)
    throw Error(ErrorKind::kParse, "unsupported MELS version");
  MelConfig cfg;
  cfg.sample_rate = static_cast<int>(binary::get_u32(in));
  cfg.n_mels = static_cast<int>(binary::get_u32(in));
  cfg.window_length = static_cast<int>(binary::get_u32(in));
  cfg.hop_length = static_cast<int>(binary::get_u32(in));
  cfg.fft_size = static_cast<int>(binary::get_u32(in));
  cfg.mel_low = binary::get_f64(in);
  cfg.mel_high = binary::get_f64(in);
  cfg.log_floor = binary::get_f64(in);
  MelSpectrogram mel;
  mel.frame_rate = binary::get_f64(in);
  mel.source_duration = binary::get_f64(in);
  const std::uint32_t frames = binary::get_u32(in);
  if (cfg.n_mels <= 0 || cfg.n_mels > 4096 || frames > (1u << 24))
    throw Error(ErrorKind::kParse, "MELS dimensions out of range");
  mel.values.resize(static_cast<std::size_t>(cfg.n_mels), frames);
  for (float& v : mel.values.flat()) v = binary::get_f32(in);
  if (config) *config = cfg;
  return mel;
}

MelSpectrogram read_mels(const std::filesystem::path& path, MelConfig* config) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kIo, "cannot open " + path.string());
  return read_mels(in, config);
}

}  // namespace lrasr::features
