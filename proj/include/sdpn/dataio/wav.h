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

#ifndef SDPN_DATAIO_WAV_H_
#define SDPN_DATAIO_WAV_H_

#include <filesystem>
#include <vector>

namespace sdpn::dataio {

/// Mono audio with amplitudes nominally in [-1, 1].
struct Waveform {
  std::vector<double> samples;
  int sample_rate = 16000;

  double DurationSeconds() const {
    return static_cast<double>(samples.size()) / sample_rate;
  }
};

/// Throws ValidationError unless sample_rate > 0, the waveform is nonempty
/// and every sample is finite.
void ValidateWaveform(const Waveform &wave);

/// Reads a RIFF/WAVE file holding 16-bit mono PCM. Samples are scaled by
/// 1/32768. Unknown chunks are skipped.
Waveform ReadWav(const std::filesystem::path &path);

/// Writes 16-bit mono PCM. Samples outside [-1, 1] are clamped (with a
/// warning) before quantization; quantization rounds to nearest.
void WriteWav(const Waveform &wave, const std::filesystem::path &path);

}  // namespace sdpn::dataio

#endif  // SDPN_DATAIO_WAV_H_
