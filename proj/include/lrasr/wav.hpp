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

// RIFF WAVE, 16-bit signed little-endian linear PCM, mono.

#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

namespace lrasr::wav {

struct Audio {
  int sample_rate = 16000;
  std::vector<std::int16_t> pcm;

  double duration() const {
    return static_cast<double>(pcm.size()) / static_cast<double>(sample_rate);
  }
  // Samples scaled to [-1, 1).
  std::vector<float> to_float() const;
  static Audio from_float(const std::vector<float>& samples, int sample_rate);
};

// Throws Error(kIo) if unreadable, Error(kParse) if not mono PCM16.
Audio read(const std::filesystem::path& path);
void write(const std::filesystem::path& path, const Audio& audio);

}  // namespace lrasr::wav
