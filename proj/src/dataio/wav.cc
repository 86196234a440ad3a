// Copyright 2026  sdpn-desk contributors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#include "sdpn/dataio/wav.h"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>

#include <spdlog/spdlog.h>

#include "sdpn/error.h"

namespace sdpn::dataio {

namespace {

uint32_t ReadU32(const unsigned char *p) {
  return uint32_t(p[0]) | (uint32_t(p[1]) << 8) | (uint32_t(p[2]) << 16) |
         (uint32_t(p[3]) << 24);
}

uint16_t ReadU16(const unsigned char *p) {
  return uint16_t(p[0] | (p[1] << 8));
}

void PutU32(std::string *out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out->push_back(char((v >> (8 * i)) & 0xff));
}

void PutU16(std::string *out, uint16_t v) {
  out->push_back(char(v & 0xff));
  out->push_back(char((v >> 8) & 0xff));
}

}  // namespace

void ValidateWaveform(const Waveform &wave) {
  if (wave.sample_rate <= 0)
    throw ValidationError("waveform sample rate must be positive");
  if (wave.samples.empty()) throw ValidationError("waveform is empty");
  for (double s : wave.samples)
    if (!std::isfinite(s))
      throw ValidationError("waveform contains non-finite samples");
}

Waveform ReadWav(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(in)),
                    std::istreambuf_iterator<char>());
  const auto *data = reinterpret_cast<const unsigned char *>(bytes.data());
  const size_t size = bytes.size();
  const std::string where = " in " + path.string();

  if (size < 12 || std::memcmp(data, "RIFF", 4) != 0 ||
      std::memcmp(data + 8, "WAVE", 4) != 0)
    throw FormatError("not a RIFF/WAVE file" + where);

  bool have_fmt = false;
  uint16_t channels = 0, bits = 0;
  uint32_t rate = 0;
  size_t pos = 12;
  while (pos + 8 <= size) {
    const uint32_t chunk_size = ReadU32(data + pos + 4);
    const size_t body = pos + 8;
    if (body + chunk_size > size) throw FormatError("truncated chunk" + where);
    if (std::memcmp(data + pos, "fmt ", 4) == 0) {
      if (chunk_size < 16) throw FormatError("short fmt chunk" + where);
      const uint16_t format = ReadU16(data + body);
      channels = ReadU16(data + body + 2);
      rate = ReadU32(data + body + 4);
      bits = ReadU16(data + body + 14);
      if (format != 1)
        throw UnsupportedFormatError("only PCM WAV is supported" + where);
      if (channels != 1)
        throw UnsupportedFormatError("only mono WAV is supported" + where);
      if (bits != 16)
        throw UnsupportedFormatError("only 16-bit WAV is supported" + where);
      if (rate == 0) throw FormatError("zero sample rate" + where);
      have_fmt = true;
    } else if (std::memcmp(data + pos, "data", 4) == 0) {
      if (!have_fmt) throw FormatError("data chunk before fmt chunk" + where);
      if (chunk_size % 2 != 0) throw FormatError("odd data size" + where);
      Waveform wave;
      wave.sample_rate = static_cast<int>(rate);
      wave.samples.resize(chunk_size / 2);
      for (size_t i = 0; i < wave.samples.size(); ++i) {
        const auto v = static_cast<int16_t>(ReadU16(data + body + 2 * i));
        wave.samples[i] = v / 32768.0;
      }
      return wave;
    }
    pos = body + chunk_size + (chunk_size & 1);
  }
  throw FormatError("no data chunk" + where);
}

void WriteWav(const Waveform &wave, const std::filesystem::path &path) {
  ValidateWaveform(wave);
  size_t n_clamped = 0;
  std::string out;
  const uint32_t data_bytes = static_cast<uint32_t>(wave.samples.size() * 2);
  out.reserve(44 + data_bytes);
  out += "RIFF";
  PutU32(&out, 36 + data_bytes);
  out += "WAVEfmt ";
  PutU32(&out, 16);
  PutU16(&out, 1);
  PutU16(&out, 1);
  PutU32(&out, static_cast<uint32_t>(wave.sample_rate));
  PutU32(&out, static_cast<uint32_t>(wave.sample_rate) * 2);
  PutU16(&out, 2);
  PutU16(&out, 16);
  out += "data";
  PutU32(&out, data_bytes);
  for (double s : wave.samples) {
    if (s > 1.0 || s < -1.0) {
      ++n_clamped;
      s = std::clamp(s, -1.0, 1.0);
    }
    const long q = std::clamp(std::lround(s * 32768.0), -32768L, 32767L);
    PutU16(&out, static_cast<uint16_t>(static_cast<int16_t>(q)));
  }
  if (n_clamped > 0)
    spdlog::warn("{}: clamped {} out-of-range samples", path.string(),
                 n_clamped);

  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) throw IoError("cannot write " + path.string());
  file.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!file) throw IoError("write failed for " + path.string());
}

}  // namespace sdpn::dataio
