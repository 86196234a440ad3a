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

#include "sdpn/pipeline/augment.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <random>

#include <fftw3.h>
#include <spdlog/spdlog.h>

#include "sdpn/error.h"

namespace sdpn::pipeline {

namespace {

std::mutex &PlanMutex() {
  static std::mutex m;
  return m;
}

// Direct convolution below this many taps.
constexpr size_t kDirectTaps = 64;

// Smallest 2^a 3^b 5^c that is >= n.
size_t SmoothSize(size_t n) {
  size_t best = 1;
  while (best < n) best <<= 1;
  for (size_t p5 = 1; p5 < best; p5 *= 5)
    for (size_t p35 = p5; p35 < best; p35 *= 3) {
      size_t v = p35;
      while (v < n) v <<= 1;
      best = std::min(best, v);
    }
  return best;
}

struct ConvPlans {
  fftw_plan fwd = nullptr;
  fftw_plan inv = nullptr;
};

// Plans are cached per transform size and run through the new-array
// interface on fftw_alloc'd (hence equally aligned) buffers.
ConvPlans PlansFor(size_t n) {
  static std::map<size_t, ConvPlans> cache;
  std::lock_guard<std::mutex> lock(PlanMutex());
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;
  double *buf = fftw_alloc_real(n);
  fftw_complex *spec = fftw_alloc_complex(n / 2 + 1);
  ConvPlans p;
  p.fwd = fftw_plan_dft_r2c_1d(static_cast<int>(n), buf, spec, FFTW_ESTIMATE);
  p.inv = fftw_plan_dft_c2r_1d(static_cast<int>(n), spec, buf, FFTW_ESTIMATE);
  fftw_free(buf);
  fftw_free(spec);
  cache.emplace(n, p);
  return p;
}

std::vector<double> FftConvolveTruncated(const std::vector<double> &x,
                                         const std::vector<double> &h) {
  const size_t n = SmoothSize(x.size() + h.size() - 1);
  const size_t n_bins = n / 2 + 1;
  const ConvPlans plans = PlansFor(n);
  double *buf = fftw_alloc_real(n);
  fftw_complex *xf = fftw_alloc_complex(n_bins);
  fftw_complex *hf = fftw_alloc_complex(n_bins);
  std::fill(buf, buf + n, 0.0);
  std::copy(x.begin(), x.end(), buf);
  fftw_execute_dft_r2c(plans.fwd, buf, xf);
  std::fill(buf, buf + n, 0.0);
  std::copy(h.begin(), h.end(), buf);
  fftw_execute_dft_r2c(plans.fwd, buf, hf);
  for (size_t k = 0; k < n_bins; ++k) {
    const double re = xf[k][0] * hf[k][0] - xf[k][1] * hf[k][1];
    const double im = xf[k][0] * hf[k][1] + xf[k][1] * hf[k][0];
    xf[k][0] = re;
    xf[k][1] = im;
  }
  fftw_execute_dft_c2r(plans.inv, xf, buf);
  std::vector<double> y(x.size());
  for (size_t i = 0; i < x.size(); ++i) y[i] = buf[i] / static_cast<double>(n);
  fftw_free(buf);
  fftw_free(xf);
  fftw_free(hf);
  return y;
}

double Peak(const std::vector<double> &x) {
  double p = 0.0;
  for (double v : x) p = std::max(p, std::abs(v));
  return p;
}

}  // namespace

void ValidateAugmentConfig(const AugmentConfig &c) {
  if (!(c.snr_min_db <= c.snr_max_db))
    throw ConfigError("SNR range is empty");
  if (c.time_mask_max < 0 || c.freq_mask_max < 0)
    throw ConfigError("mask maxima must be >= 0");
  if (c.noise_prob < 0 || c.noise_prob > 1 || c.rir_prob < 0 || c.rir_prob > 1)
    throw ConfigError("augmentation probabilities must lie in [0, 1]");
  if (c.noise_source == NoiseSourceKind::kCorpusDir && c.noise_dir.empty())
    throw ConfigError("noise corpus directory not set");
  if (c.rir_source == RirSourceKind::kCorpusDir && c.rir_dir.empty())
    throw ConfigError("RIR corpus directory not set");
  if (!(c.synthetic_rt60_s > 0)) throw ConfigError("RT60 must be positive");
}

double MeanPower(const std::vector<double> &x) {
  if (x.empty()) return 0.0;
  double acc = 0.0;
  for (double v : x) acc += v * v;
  return acc / static_cast<double>(x.size());
}

double NoiseGainForSnr(double p_clean, double p_noise, double snr_db) {
  if (p_noise <= 0.0) return 0.0;
  return std::sqrt(p_clean / (p_noise * std::pow(10.0, snr_db / 10.0)));
}

dataio::Waveform MixNoise(const dataio::Waveform &clean,
                          const dataio::Waveform &noise, double snr_db,
                          Rng &rng) {
  if (clean.sample_rate != noise.sample_rate)
    throw ValidationError("mix_noise: sample rate mismatch");
  if (noise.samples.empty()) throw ValidationError("mix_noise: empty noise");
  const size_t n = clean.samples.size();
  const size_t offset =
      noise.samples.size() > 1
          ? static_cast<size_t>(UniformInt(rng, 0, static_cast<int>(noise.samples.size()) - 1))
          : 0;
  std::vector<double> tiled(n);
  for (size_t i = 0; i < n; ++i)
    tiled[i] = noise.samples[(offset + i) % noise.samples.size()];

  const double p_noise = MeanPower(tiled);
  dataio::Waveform out = clean;
  if (p_noise <= 0.0) return out;
  const double g = NoiseGainForSnr(MeanPower(clean.samples), p_noise, snr_db);
  for (size_t i = 0; i < n; ++i) out.samples[i] += g * tiled[i];
  return out;
}

std::vector<double> ConvolveTruncated(const std::vector<double> &x,
                                      const std::vector<double> &h) {
  if (h.empty()) throw ValidationError("empty impulse response");
  if (x.empty()) return {};
  if (h.size() > kDirectTaps) return FftConvolveTruncated(x, h);
  std::vector<double> y(x.size(), 0.0);
  for (size_t i = 0; i < x.size(); ++i) {
    const size_t kmax = std::min(h.size() - 1, i);
    double acc = 0.0;
    for (size_t k = 0; k <= kmax; ++k) acc += h[k] * x[i - k];
    y[i] = acc;
  }
  return y;
}

dataio::Waveform ApplyRir(const dataio::Waveform &wave,
                          const dataio::Waveform &rir) {
  if (rir.samples.empty()) throw ValidationError("apply_rir: empty RIR");
  if (wave.sample_rate != rir.sample_rate)
    throw ValidationError("apply_rir: sample rate mismatch");
  dataio::Waveform out;
  out.sample_rate = wave.sample_rate;
  out.samples = ConvolveTruncated(wave.samples, rir.samples);
  const double in_peak = Peak(wave.samples), out_peak = Peak(out.samples);
  if (out_peak > 0.0 && out_peak != in_peak) {
    const double s = in_peak / out_peak;
    for (auto &v : out.samples) v *= s;
  }
  return out;
}

FeatureMatrix ApplyMasks(const FeatureMatrix &features, TimeMask time,
                         FreqMask freq) {
  FeatureMatrix out = features;
  if (features.size() == 0) return out;
  const float fill = features.mean();
  const int n_t = static_cast<int>(features.rows());
  const int n_f = static_cast<int>(features.cols());
  const int t0 = std::clamp(time.start, 0, n_t);
  const int t1 = std::clamp(time.start + time.width, t0, n_t);
  const int f0 = std::clamp(freq.start, 0, n_f);
  const int f1 = std::clamp(freq.start + freq.width, f0, n_f);
  if (t1 > t0) out.middleRows(t0, t1 - t0).setConstant(fill);
  if (f1 > f0) out.middleCols(f0, f1 - f0).setConstant(fill);
  return out;
}

FeatureMatrix SpecAugment(const FeatureMatrix &features,
                          const AugmentConfig &config, Rng &rng,
                          AugmentTrace *trace) {
  if (features.size() == 0) throw ValidationError("spec_augment: empty input");
  const int n_t = static_cast<int>(features.rows());
  const int n_f = static_cast<int>(features.cols());
  TimeMask tm;
  FreqMask fm;
  tm.width = std::min(UniformInt(rng, 0, config.time_mask_max), n_t);
  tm.start = UniformInt(rng, 0, n_t - tm.width);
  fm.width = std::min(UniformInt(rng, 0, config.freq_mask_max), n_f);
  fm.start = UniformInt(rng, 0, n_f - fm.width);
  if (trace) ++trace->spec_augment;
  return ApplyMasks(features, tm, fm);
}

std::vector<std::filesystem::path> ListWavFiles(const std::filesystem::path &dir) {
  std::vector<std::filesystem::path> files;
  std::error_code ec;
  for (const auto &e : std::filesystem::directory_iterator(dir, ec)) {
    if (!e.is_regular_file()) continue;
    auto ext = e.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    if (ext == ".wav") files.push_back(e.path());
  }
  if (ec) throw IoError("cannot list " + dir.string() + ": " + ec.message());
  std::sort(files.begin(), files.end());
  return files;
}

AugmentSources::AugmentSources(const AugmentConfig &config, int sample_rate)
    : config_(config), sample_rate_(sample_rate) {
  ValidateAugmentConfig(config);
  auto load_dir = [&](const std::filesystem::path &dir, const char *what) {
    std::vector<dataio::Waveform> waves;
    for (const auto &p : ListWavFiles(dir)) {
      auto w = dataio::ReadWav(p);
      if (w.sample_rate != sample_rate)
        throw ValidationError(std::string(what) + " file " + p.string() +
                              " has sample rate " +
                              std::to_string(w.sample_rate));
      waves.push_back(std::move(w));
    }
    if (waves.empty())
      throw ConfigError(std::string("no WAV files in ") + what + " directory " +
                        dir.string());
    spdlog::info("loaded {} {} files from {}", waves.size(), what, dir.string());
    return waves;
  };
  if (config.noise_source == NoiseSourceKind::kCorpusDir)
    noises_ = load_dir(config.noise_dir, "noise");
  if (config.rir_source == RirSourceKind::kCorpusDir)
    rirs_ = load_dir(config.rir_dir, "RIR");
}

dataio::Waveform AugmentSources::Noise(size_t length, Rng &rng) const {
  if (!noises_.empty())
    return noises_[UniformInt(rng, 0, static_cast<int>(noises_.size()) - 1)];
  dataio::Waveform w;
  w.sample_rate = sample_rate_;
  w.samples.resize(std::max<size_t>(length, 1));
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (auto &v : w.samples) v = gauss(rng);
  return w;
}

dataio::Waveform AugmentSources::Rir(Rng &rng) const {
  if (!rirs_.empty())
    return rirs_[UniformInt(rng, 0, static_cast<int>(rirs_.size()) - 1)];
  // Direct path followed by an exponentially decaying Gaussian tail
  // (60 dB down after rt60).
  const double rt60 = config_.synthetic_rt60_s;
  const size_t n = static_cast<size_t>(std::ceil(rt60 * sample_rate_));
  const double decay = std::log(1000.0) / (rt60 * sample_rate_);
  dataio::Waveform w;
  w.sample_rate = sample_rate_;
  w.samples.resize(std::max<size_t>(n, 1));
  w.samples[0] = 1.0;
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (size_t i = 1; i < w.samples.size(); ++i)
    w.samples[i] = 0.3 * gauss(rng) * std::exp(-decay * static_cast<double>(i));
  return w;
}

}  // namespace sdpn::pipeline
