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

#ifndef SDPN_DATAIO_SYNTH_CORPUS_H_
#define SDPN_DATAIO_SYNTH_CORPUS_H_

#include <cstdint>
#include <filesystem>

#include "sdpn/dataio/manifest.h"
#include "sdpn/dataio/wav.h"

namespace sdpn::dataio {

struct SynthCorpusConfig {
  int n_speakers = 20;
  int utts_per_speaker = 50;
  double utt_duration_s = 5.0;
  int sample_rate = 16000;
  uint64_t seed = 1;
  // Used for the "duration covers a global view" check.
  double min_duration_s = 4.0;
};

void ValidateSynthConfig(const SynthCorpusConfig &config);

/// Fixed per-speaker voice parameters. Each speaker is a harmonic source at
/// a fixed fundamental shaped by a speaker-specific harmonic envelope and a
/// two-pole resonator.
struct SpeakerProfile {
  double f0_hz = 0.0;
  std::vector<double> harmonic_gain;
  double resonance_hz = 0.0;
  double resonance_bw_hz = 0.0;
};

SpeakerProfile MakeSpeakerProfile(uint64_t seed, int speaker_index,
                                  int sample_rate);

/// Renders one utterance of `profile`. Deterministic in (seed, speaker,
/// utterance).
Waveform SynthesizeUtterance(const SpeakerProfile &profile, uint64_t seed,
                             int speaker_index, int utt_index,
                             double duration_s, int sample_rate);

/// Writes n_speakers * utts_per_speaker WAV files and `manifest.tsv` to
/// out_dir. Output bytes are a pure function of the config.
Manifest GenerateSynthCorpus(const SynthCorpusConfig &config,
                             const std::filesystem::path &out_dir);

}  // namespace sdpn::dataio

#endif  // SDPN_DATAIO_SYNTH_CORPUS_H_
