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

#include "sdpn/pipeline/multicrop.h"

#include <cmath>

#include <spdlog/spdlog.h>

#include "sdpn/error.h"

namespace sdpn::pipeline {

void ValidateCropConfig(const CropConfig &config) {
  if (!(config.local_s > 0) || !(config.global_s >= config.local_s))
    throw ConfigError("need 0 < local crop <= global crop");
}

dataio::Waveform Segment(const dataio::Waveform &wave, long start, long length) {
  dataio::Waveform out;
  out.sample_rate = wave.sample_rate;
  out.samples.resize(length);
  const long n = static_cast<long>(wave.samples.size());
  for (long i = 0; i < length; ++i) out.samples[i] = wave.samples[(start + i) % n];
  return out;
}

CropSet SampleMultiCrop(const dataio::Waveform &wave,
                        const std::string &utterance_id,
                        const AugmentConfig &aug, const AugmentSources &sources,
                        const Fbank &fbank, const CropConfig &crop, Rng &rng) {
  dataio::ValidateWaveform(wave);
  const long n = static_cast<long>(wave.samples.size());
  const long global_len = std::lround(crop.global_s * wave.sample_rate);
  const long local_len = std::lround(crop.local_s * wave.sample_rate);
  if (n < global_len)
    spdlog::warn("{}: {:.3f} s is shorter than the {:.1f} s global view; "
                 "padding by wrap-around",
                 utterance_id, wave.DurationSeconds(), crop.global_s);
  auto place = [&](long len) -> long {
    return n > len ? static_cast<long>(UniformInt(rng, 0, static_cast<int>(n - len)))
                   : 0;
  };

  CropSet set;
  set.utterance_id = utterance_id;
  set.global = fbank.Compute(Segment(wave, place(global_len), global_len));

  for (int v = 0; v < kNumLocalViews; ++v) {
    AugmentTrace &trace = set.local_traces[v];
    dataio::Waveform local = Segment(wave, place(local_len), local_len);
    if (aug.wav_augment) {
      if (Bernoulli(rng, aug.noise_prob)) {
        const double snr = Uniform(rng, aug.snr_min_db, aug.snr_max_db);
        local = MixNoise(local, sources.Noise(local.samples.size(), rng), snr, rng);
        ++trace.mix_noise;
      }
      if (Bernoulli(rng, aug.rir_prob)) {
        local = ApplyRir(local, sources.Rir(rng));
        ++trace.rir;
      }
    }
    FeatureMatrix feats = fbank.Compute(local);
    if (aug.spec_augment) feats = SpecAugment(feats, aug, rng, &trace);
    set.locals[v] = std::move(feats);
  }
  return set;
}

}  // namespace sdpn::pipeline
