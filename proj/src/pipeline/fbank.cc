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

#include "sdpn/pipeline/fbank.h"

#include <cmath>
#include <mutex>
#include <numbers>

#include <fftw3.h>

#include "sdpn/error.h"

namespace sdpn::pipeline {

namespace {
// FFTW planning is not thread safe; execution on distinct buffers is.
std::mutex &PlannerMutex() {
  static std::mutex m;
  return m;
}
}  // namespace

struct Fbank::FftState {
  double *in = nullptr;
  fftw_complex *out = nullptr;
  fftw_plan plan = nullptr;
  int n = 0;

  explicit FftState(int n_fft) : n(n_fft) {
    std::lock_guard<std::mutex> lock(PlannerMutex());
    in = fftw_alloc_real(n);
    out = fftw_alloc_complex(n / 2 + 1);
    plan = fftw_plan_dft_r2c_1d(n, in, out, FFTW_ESTIMATE);
  }
  ~FftState() {
    std::lock_guard<std::mutex> lock(PlannerMutex());
    fftw_destroy_plan(plan);
    fftw_free(in);
    fftw_free(out);
  }
};

void ValidateFbankConfig(const FbankConfig &c, int sample_rate) {
  if (sample_rate <= 0) throw ConfigError("sample rate must be positive");
  if (c.n_mels < 1) throw ConfigError("n_mels must be >= 1");
  if (!(c.win_length_ms > 0) || !(c.hop_length_ms > 0))
    throw ConfigError("window and hop must be positive");
  if (c.win_length_ms < c.hop_length_ms)
    throw ConfigError("window must be at least as long as the hop");
  const int win = static_cast<int>(std::lround(c.win_length_ms * sample_rate / 1000.0));
  if (c.n_fft < win) throw ConfigError("n_fft must cover the window length");
  const double fmax = c.fmax > 0 ? c.fmax : 0.5 * sample_rate;
  if (!(c.fmin >= 0) || !(fmax > c.fmin) || fmax > 0.5 * sample_rate)
    throw ConfigError("need 0 <= fmin < fmax <= sample_rate / 2");
  if (!(c.log_floor > 0)) throw ConfigError("log floor must be positive");
}

double HzToMel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double MelToHz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

int NumFrames(long n_samples, int win, int hop) {
  if (n_samples < win) return 0;
  return 1 + static_cast<int>((n_samples - win) / hop);
}

Fbank::Fbank(const FbankConfig &config, int sample_rate)
    : config_(config), sample_rate_(sample_rate) {
  ValidateFbankConfig(config, sample_rate);
  win_ = static_cast<int>(std::lround(config.win_length_ms * sample_rate / 1000.0));
  hop_ = static_cast<int>(std::lround(config.hop_length_ms * sample_rate / 1000.0));
  window_.resize(win_);
  for (int i = 0; i < win_; ++i)
    window_[i] = win_ > 1 ? 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * i /
                                                   (win_ - 1))
                          : 1.0;

  // Triangles are built in the mel domain.
  const double fmax = config.fmax > 0 ? config.fmax : 0.5 * sample_rate;
  const double mel_lo = HzToMel(config.fmin), mel_hi = HzToMel(fmax);
  const double mel_step = (mel_hi - mel_lo) / (config.n_mels + 1);
  const int n_bins = config.n_fft / 2 + 1;
  filters_.resize(config.n_mels);
  for (int m = 0; m < config.n_mels; ++m) {
    const double left = mel_lo + m * mel_step;
    const double center = left + mel_step;
    const double right = center + mel_step;
    Filter &f = filters_[m];
    f.first_bin = -1;
    for (int k = 0; k < n_bins; ++k) {
      const double mel = HzToMel(static_cast<double>(k) * sample_rate / config.n_fft);
      double w = 0.0;
      if (mel > left && mel < right)
        w = mel <= center ? (mel - left) / (center - left)
                          : (right - mel) / (right - center);
      if (w > 0.0) {
        if (f.first_bin < 0) f.first_bin = k;
        f.weights.resize(k - f.first_bin + 1, 0.0);
        f.weights.back() = w;
      }
    }
    if (f.first_bin < 0) f.first_bin = 0;  // empty filter: always floor
  }
  fft_ = std::make_unique<FftState>(config.n_fft);
}

Fbank::~Fbank() = default;

std::vector<double> Fbank::CenterFrequencies() const {
  const double fmax = config_.fmax > 0 ? config_.fmax : 0.5 * sample_rate_;
  const double mel_lo = HzToMel(config_.fmin), mel_hi = HzToMel(fmax);
  const double mel_step = (mel_hi - mel_lo) / (config_.n_mels + 1);
  std::vector<double> centers(config_.n_mels);
  for (int m = 0; m < config_.n_mels; ++m)
    centers[m] = MelToHz(mel_lo + (m + 1) * mel_step);
  return centers;
}

FeatureMatrix Fbank::Compute(const dataio::Waveform &wave) const {
  if (wave.sample_rate != sample_rate_)
    throw ValidationError("sample rate " + std::to_string(wave.sample_rate) +
                          " does not match extractor rate " +
                          std::to_string(sample_rate_));
  const long n = static_cast<long>(wave.samples.size());
  const int n_frames = NumFrames(n, win_, hop_);
  if (n_frames < 1)
    throw ValidationError("waveform shorter than one analysis window");

  const int n_fft = config_.n_fft;
  const int n_bins = n_fft / 2 + 1;
  std::vector<double> power(n_bins);
  const double log_floor = std::log(config_.log_floor);
  FeatureMatrix out(n_frames, config_.n_mels);
  double *buf = fft_->in;
  for (int t = 0; t < n_frames; ++t) {
    const double *frame = wave.samples.data() + static_cast<long>(t) * hop_;
    for (int i = win_ - 1; i > 0; --i)
      buf[i] = frame[i] - config_.preemph * frame[i - 1];
    buf[0] = frame[0] - config_.preemph * frame[0];
    for (int i = 0; i < win_; ++i) buf[i] *= window_[i];
    for (int i = win_; i < n_fft; ++i) buf[i] = 0.0;
    fftw_execute(fft_->plan);
    for (int k = 0; k < n_bins; ++k)
      power[k] = fft_->out[k][0] * fft_->out[k][0] +
                 fft_->out[k][1] * fft_->out[k][1];
    for (int m = 0; m < config_.n_mels; ++m) {
      const Filter &f = filters_[m];
      double e = 0.0;
      for (size_t j = 0; j < f.weights.size(); ++j)
        e += f.weights[j] * power[f.first_bin + j];
      out(t, m) = static_cast<float>(e > config_.log_floor ? std::log(e)
                                                           : log_floor);
    }
  }
  return out;
}

FeatureMatrix ComputeFbank(const dataio::Waveform &wave,
                           const FbankConfig &config) {
  Fbank fbank(config, wave.sample_rate);
  return fbank.Compute(wave);
}

}  // namespace sdpn::pipeline
