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

#include "lrasr/wav.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <fstream>
#include <string>

#include "lrasr/errors.hpp"

namespace lrasr::wav {
namespace {

std::uint32_t le32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}
std::uint16_t le16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}
void put32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
void put16(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>(v >> 8));
}

}  // namespace

std::vector<float> Audio::to_float() const {
  std::vector<float> out(pcm.size());
  std::transform(pcm.begin(), pcm.end(), out.begin(),
                 [](std::int16_t s) { return static_cast<float>(s) / 32768.0f; });
  return out;
}

Audio Audio::from_float(const std::vector<float>& samples, int sample_rate) {
  Audio a;
  a.sample_rate = sample_rate;
  a.pcm.resize(samples.size());
  std::transform(samples.begin(), samples.end(), a.pcm.begin(), [](float x) {
    const double v = std::nearbyint(static_cast<double>(x) * 32767.0);
    return static_cast<std::int16_t>(std::clamp(v, -32768.0, 32767.0));
  });
  return a;
}

Audio read(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kIo, "cannot open " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const auto* b = reinterpret_cast<const unsigned char*>(bytes.data());
  if (bytes.size() < 12 || std::memcmp(b, "RIFF", 4) != 0 || std::memcmp(b + 8, "WAVE", 4) != 0)
    throw Error(ErrorKind::kParse, path.string() + " is not a RIFF/WAVE file");

  bool have_fmt = false;
  Audio audio;
  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const std::uint32_t size = le32(b + pos + 4);
    const std::size_t body = pos + 8;
    if (body + size > bytes.size())
      throw Error(ErrorKind::kParse, "truncated chunk in " + path.string());
    if (std::memcmp(b + pos, "fmt ", 4) == 0) {
      if (size < 16) throw Error(ErrorKind::kParse, "short fmt chunk in " + path.string());
      const std::uint16_t format = le16(b + body);
      const std::uint16_t channels = le16(b + body + 2);
      const std::uint16_t bits = le16(b + body + 14);
      if (format != 1 || channels != 1 || bits != 16)
        throw Error(ErrorKind::kParse, path.string() + ": only mono 16-bit PCM is supported");
      audio.sample_rate = static_cast<int>(le32(b + body + 4));
      have_fmt = true;
    } else if (std::memcmp(b + pos, "data", 4) == 0) {
      if (!have_fmt) throw Error(ErrorKind::kParse, "data before fmt in " + path.string());
      audio.pcm.resize(size / 2);
      for (std::size_t i = 0; i < audio.pcm.size(); ++i)
        audio.pcm[i] = static_cast<std::int16_t>(le16(b + body + 2 * i));
      return audio;
    }
    pos = body + size + (size & 1u);
  }
  throw Error(ErrorKind::kParse, "no data chunk in " + path.string());
}

void write(const std::filesystem::path& path, const Audio& audio) {
  const auto data_bytes = static_cast<std::uint32_t>(audio.pcm.size() * 2);
  std::string out;
  out.reserve(44 + data_bytes);
  out += "RIFF";
  put32(out, 36 + data_bytes);
  out += "WAVEfmt ";
  put32(out, 16);
  put16(out, 1);  // PCM
  put16(out, 1);  // mono
  put32(out, static_cast<std::uint32_t>(audio.sample_rate));
  put32(out, static_cast<std::uint32_t>(audio.sample_rate) * 2);
  put16(out, 2);
  put16(out, 16);
  out += "data";
  put32(out, data_bytes);
  for (std::int16_t s : audio.pcm) put16(out, static_cast<std::uint16_t>(s));

  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorKind::kIo, "cannot write " + path.string());
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw Error(ErrorKind::kIo, "short write to " + path.string());
}

}  // namespace lrasr::wav
