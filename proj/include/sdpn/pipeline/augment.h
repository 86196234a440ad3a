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

#ifndef SDPN_PIPELINE_AUGMENT_H_
#define SDPN_PIPELINE_AUGMENT_H_

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "sdpn/dataio/wav.h"
#include "sdpn/pipeline/fbank.h"
#include "sdpn/random.h"

namespace sdpn::pipeline {

enum class NoiseSourceKind { kSyntheticWhite, kCorpusDir };
enum class RirSourceKind { kSyntheticExponential, kCorpusDir };

struct AugmentConfig {
  bool wav_augment = true;
  bool spec_augment = true;
  double snr_min_db = 0.0;
  double snr_max_db = 15.0;
  double noise_prob = 0.5;
  double rir_prob = 0.5;
  NoiseSourceKind noise_source = NoiseSourceKind::kSyntheticWhite;
  std::filesystem::path noise_dir;
  RirSourceKind rir_source = RirSourceKind::kSyntheticExponential;
  std::filesystem::path rir_dir;
  double synthetic_rt60_s = 0.3;
  int time_mask_max = 10;
  int freq_mask_max = 6;
};

void ValidateAugmentConfig(const AugmentConfig &config);

/// Counts of augmentation transforms applied to one view.
struct AugmentTrace {
  int mix_noise = 0;
  int rir = 0;
  int spec_augment = 0;

  AugmentTrace &operator+=(const AugmentTrace &o) {
    mix_noise += o.mix_noise;
    rir += o.rir;
    spec_augment += o.spec_augment;
    return *this;
  }
  int total() const { return mix_noise + rir + spec_augment; }
};

double MeanPower(const std::vector<double> &x);

/// Gain g such that 10 log10(p_clean / (g^2 p_noise)) == snr_db.
double NoiseGainForSnr(double p_clean, double p_noise, double snr_db);

/// clean + g * noise at the requested SNR. The noise is tiled from a random
/// offset to the clean length. Silent noise returns clean unchanged.
dataio::Waveform MixNoise(const dataio::Waveform &clean,
                          const dataio::Waveform &noise, double snr_db,
                          Rng &rng);

/// Full linear convolution of x with h truncated to x.size().
std::vector<double> ConvolveTruncated(const std::vector<double> &x,
                                      const std::vector<double> &h);

/// Reverberates `wave` with `rir` and rescales to the input's peak.
dataio::Waveform ApplyRir(const dataio::Waveform &wave,
                          const dataio::Waveform &rir);

struct TimeMask {
  int start = 0;
  int width = 0;
};
struct FreqMask {
  int start = 0;
  int width = 0;
};

/// Sets the masked rows/columns to the mean of `features` (taken before
/// masking). Masks are clipped to the matrix.
FeatureMatrix ApplyMasks(const FeatureMatrix &features, TimeMask time,
                         FreqMask freq);

/// One time mask of width ~ U{0..time_mask_max} and one frequency mask of
/// width ~ U{0..freq_mask_max}, each uniformly placed.
FeatureMatrix SpecAugment(const FeatureMatrix &features,
                          const AugmentConfig &config, Rng &rng,
                          AugmentTrace *trace = nullptr);

/// Source of noise / impulse-response waveforms: either synthesized on
/// demand or drawn from a flat directory of WAV files.
class AugmentSources {
 public:
  AugmentSources(const AugmentConfig &config, int sample_rate);

  dataio::Waveform Noise(size_t length, Rng &rng) const;
  dataio::Waveform Rir(Rng &rng) const;

 private:
  AugmentConfig config_;
  int sample_rate_;
  std::vector<dataio::Waveform> noises_;
  std::vector<dataio::Waveform> rirs_;
};

/// Sorted list of *.wav files in a directory.
std::vector<std::filesystem::path> ListWavFiles(const std::filesystem::path &dir);

}  // namespace sdpn::pipeline

#endif  // SDPN_PIPELINE_AUGMENT_H_
