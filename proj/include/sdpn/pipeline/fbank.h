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

#ifndef SDPN_PIPELINE_FBANK_H_
#define SDPN_PIPELINE_FBANK_H_

#include <memory>
#include <vector>

#include <Eigen/Core>

#include "sdpn/dataio/wav.h"

namespace sdpn::pipeline {

/// T x n_mels log mel energies, one frame per row.
using FeatureMatrix =
    Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct FbankConfig {
  int n_mels = 80;
  double win_length_ms = 25.0;
  double hop_length_ms = 10.0;
  int n_fft = 512;
  double fmin = 20.0;
  double fmax = 0.0;  // <= 0 means sample_rate / 2
  double log_floor = 1e-10;
  double preemph = 0.97;
};

void ValidateFbankConfig(const FbankConfig &config, int sample_rate);

double HzToMel(double hz);
double MelToHz(double mel);

/// Frames for n_samples: 1 + floor((n_samples - win) / hop), or 0 when the
/// signal is shorter than one window.
int NumFrames(long n_samples, int win, int hop);

/// Log mel filterbank extractor bound to one sample rate. Each frame is
/// pre-emphasized, Hamming-windowed, transformed to a power spectrum and
/// pooled with HTK-scale triangular filters.
class Fbank {
 public:
  Fbank(const FbankConfig &config, int sample_rate);
  ~Fbank();
  Fbank(const Fbank &) = delete;
  Fbank &operator=(const Fbank &) = delete;

  // Not safe to call concurrently on one instance (shared FFT buffers).
  FeatureMatrix Compute(const dataio::Waveform &wave) const;

  int window_length() const { return win_; }
  int hop_length() const { return hop_; }
  int sample_rate() const { return sample_rate_; }
  const FbankConfig &config() const { return config_; }
  /// Center frequency in Hz of each mel filter.
  std::vector<double> CenterFrequencies() const;

 private:
  struct Filter {
    int first_bin = 0;
    std::vector<double> weights;
  };
  struct FftState;

  FbankConfig config_;
  int sample_rate_;
  int win_ = 0, hop_ = 0;
  std::vector<double> window_;
  std::vector<Filter> filters_;
  std::unique_ptr<FftState> fft_;
};

/// Convenience wrapper that builds a one-off extractor.
FeatureMatrix ComputeFbank(const dataio::Waveform &wave,
                           const FbankConfig &config);

}  // namespace sdpn::pipeline

#endif  // SDPN_PIPELINE_FBANK_H_
