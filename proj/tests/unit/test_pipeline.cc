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

#include <cmath>
#include <numeric>

#include "doctest.h"
#include "sdpn/dataio/wav.h"
#include "sdpn/error.h"
#include "sdpn/pipeline/augment.h"
#include "sdpn/pipeline/fbank.h"
#include "sdpn/pipeline/multicrop.h"
#include "test_util.h"

using namespace sdpn;
using namespace sdpn::pipeline;
using dataio::Waveform;

namespace {

Waveform Tone(double hz, double seconds, int sr = 16000, double amp = 0.5) {
  Waveform w;
  w.sample_rate = sr;
  w.samples.resize(static_cast<size_t>(seconds * sr));
  for (size_t i = 0; i < w.samples.size(); ++i)
    w.samples[i] = amp * std::sin(2 * M_PI * hz * i / sr);
  return w;
}

Waveform Noise(size_t n, uint64_t seed) {
  Rng rng(seed);
  Waveform w;
  w.samples.resize(n);
  for (auto &v : w.samples) v = 0.1 * Gaussian(rng);
  return w;
}

// Straightforward re-derivation of one log-mel frame with a plain DFT.
std::vector<double> NaiveFbankFrame(const std::vector<double> &x, long start,
                                    const FbankConfig &c, int sr) {
  const int win = static_cast<int>(std::lround(c.win_length_ms * sr / 1000.0));
  std::vector<double> f(c.n_fft, 0.0);
  for (int i = 0; i < win; ++i) {
    const double prev = i == 0 ? x[start] : x[start + i - 1];
    const double w = 0.54 - 0.46 * std::cos(2 * M_PI * i / (win - 1));
    f[i] = (x[start + i] - c.preemph * prev) * w;
  }
  const int bins = c.n_fft / 2 + 1;
  std::vector<double> power(bins);
  for (int k = 0; k < bins; ++k) {
    double re = 0, im = 0;
    for (int t = 0; t < c.n_fft; ++t) {
      re += f[t] * std::cos(2 * M_PI * k * t / c.n_fft);
      im -= f[t] * std::sin(2 * M_PI * k * t / c.n_fft);
    }
    power[k] = re * re + im * im;
  }
  auto mel = [](double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); };
  const double lo = mel(c.fmin), hi = mel(sr / 2.0);
  std::vector<double> out(c.n_mels);
  for (int m = 0; m < c.n_mels; ++m) {
    const double l = lo + m * (hi - lo) / (c.n_mels + 1);
    const double ce = lo + (m + 1) * (hi - lo) / (c.n_mels + 1);
    const double r = lo + (m + 2) * (hi - lo) / (c.n_mels + 1);
    double e = 0;
    for (int k = 0; k < bins; ++k) {
      const double mk = mel(static_cast<double>(k) * sr / c.n_fft);
      const double w = std::max(0.0, std::min((mk - l) / (ce - l), (r - mk) / (r - ce)));
      e += w * power[k];
    }
    out[m] = std::log(std::max(e, c.log_floor));
  }
  return out;
}

}  // namespace

TEST_CASE("mel scale and frame count") {
  CHECK(HzToMel(0.0) == 0.0);
  CHECK(HzToMel(700.0) == doctest::Approx(2595.0 * std::log10(2.0)).epsilon(1e-12));
  for (double hz : {20.0, 440.0, 1000.0, 7999.0})
    CHECK(MelToHz(HzToMel(hz)) == doctest::Approx(hz).epsilon(1e-12));
  CHECK(NumFrames(16000, 400, 160) == 98);
  CHECK(NumFrames(64000, 400, 160) == 398);
  CHECK(NumFrames(400, 400, 160) == 1);
  CHECK(NumFrames(399, 400, 160) == 0);
}

TEST_CASE("fbank: shape, window and hop") {
  Fbank fb(FbankConfig{}, 16000);
  CHECK(fb.window_length() == 400);
  CHECK(fb.hop_length() == 160);
  const FeatureMatrix m = fb.Compute(Tone(440, 1.0));
  CHECK(m.rows() == 98);
  CHECK(m.cols() == 80);
  CHECK(m.allFinite());
}

TEST_CASE("fbank: matches a plain-DFT re-derivation") {
  const FbankConfig c;
  const Waveform w = Noise(4000, 3);
  const FeatureMatrix m = ComputeFbank(w, c);
  for (int t : {0, 7, 22}) {
    const auto ref = NaiveFbankFrame(w.samples, 160L * t, c, 16000);
    for (int k = 0; k < c.n_mels; ++k)
      CHECK(m(t, k) == doctest::Approx(ref[k]).epsilon(1e-5));
  }
}

TEST_CASE("fbank: a pure tone peaks in the band containing it") {
  Fbank fb(FbankConfig{}, 16000);
  const auto centers = fb.CenterFrequencies();
  for (double hz : {300.0, 1000.0, 3000.0}) {
    const FeatureMatrix m = fb.Compute(Tone(hz, 0.5));
    Eigen::Index best;
    m.colwise().mean().maxCoeff(&best);
    // The peak filter is the one whose centre is nearest the tone.
    size_t nearest = 0;
    for (size_t k = 0; k < centers.size(); ++k)
      if (std::abs(centers[k] - hz) < std::abs(centers[nearest] - hz)) nearest = k;
    CHECK(std::abs(static_cast<long>(best) - static_cast<long>(nearest)) <= 1);
  }
}

TEST_CASE("fbank: silence hits the log floor, errors on bad input") {
  const FbankConfig c;
  Waveform silent;
  silent.samples.assign(1600, 0.0);
  const FeatureMatrix m = ComputeFbank(silent, c);
  CHECK((m.array() == static_cast<float>(std::log(c.log_floor))).all());
  Waveform tiny;
  tiny.samples.assign(399, 0.1);
  CHECK_THROWS_AS(ComputeFbank(tiny, c), ValidationError);
  Waveform other = Tone(440, 0.1, 8000);
  Fbank fb(c, 16000);
  CHECK_THROWS_AS(fb.Compute(other), ValidationError);
  FbankConfig bad;
  bad.n_fft = 256;
  CHECK_THROWS_AS(Fbank(bad, 16000), ConfigError);
  bad = {};
  bad.n_mels = 0;
  CHECK_THROWS_AS(Fbank(bad, 16000), ConfigError);
}

TEST_CASE("noise mixing reaches the requested SNR") {
  CHECK(NoiseGainForSnr(1.0, 1.0, 0.0) == doctest::Approx(1.0));
  CHECK(NoiseGainForSnr(1.0, 1.0, 20.0) == doctest::Approx(0.1));
  CHECK(NoiseGainForSnr(4.0, 1.0, 0.0) == doctest::Approx(2.0));
  const Waveform clean = Tone(300, 0.5);
  const Waveform noise = Noise(3000, 9);
  Rng rng(1);
  for (double snr : {0.0, 7.5, 15.0}) {
    const Waveform mixed = MixNoise(clean, noise, snr, rng);
    std::vector<double> added(clean.samples.size());
    for (size_t i = 0; i < added.size(); ++i) added[i] = mixed.samples[i] - clean.samples[i];
    const double measured = 10 * std::log10(MeanPower(clean.samples) / MeanPower(added));
    CHECK(measured == doctest::Approx(snr).epsilon(1e-9));
  }
  Waveform silent;
  silent.samples.assign(100, 0.0);
  const Waveform same = MixNoise(clean, silent, 5.0, rng);
  CHECK(same.samples == clean.samples);
}

TEST_CASE("convolution: direct and FFT paths agree with the definition") {
  const Waveform x = Noise(3000, 4);
  for (size_t taps : {1u, 5u, 64u, 65u, 700u}) {
    Rng rng(taps);
    std::vector<double> h(taps);
    for (auto &v : h) v = Gaussian(rng);
    const auto y = ConvolveTruncated(x.samples, h);
    REQUIRE(y.size() == x.samples.size());
    for (size_t i : {0ul, 1ul, 63ul, 64ul, 999ul, 2999ul}) {
      double ref = 0;
      for (size_t k = 0; k < taps && k <= i; ++k) ref += h[k] * x.samples[i - k];
      CHECK(y[i] == doctest::Approx(ref).epsilon(1e-9).scale(1.0));
    }
  }
  CHECK_THROWS_AS(ConvolveTruncated(x.samples, {}), ValidationError);
}

TEST_CASE("reverberation keeps the input peak; delta RIR is identity") {
  const Waveform x = Tone(500, 0.25);
  Waveform delta;
  delta.samples = {1.0};
  const Waveform same = ApplyRir(x, delta);
  for (size_t i = 0; i < x.samples.size(); ++i)
    CHECK(same.samples[i] == doctest::Approx(x.samples[i]));
  AugmentSources src(AugmentConfig{}, 16000);
  Rng rng(2);
  const Waveform rir = src.Rir(rng);
  CHECK(rir.samples.size() == 4800);
  CHECK(rir.samples[0] == 1.0);
  const Waveform rev = ApplyRir(x, rir);
  double p_in = 0, p_out = 0;
  for (double v : x.samples) p_in = std::max(p_in, std::abs(v));
  for (double v : rev.samples) p_out = std::max(p_out, std::abs(v));
  CHECK(p_out == doctest::Approx(p_in).epsilon(1e-12));
}

TEST_CASE("masks fill with the pre-mask mean and clip to the matrix") {
  FeatureMatrix f(6, 4);
  for (int i = 0; i < f.size(); ++i) f.data()[i] = static_cast<float>(i);
  const float mean = f.mean();
  const FeatureMatrix m = ApplyMasks(f, {1, 2}, {3, 5});
  for (int t = 0; t < 6; ++t)
    for (int k = 0; k < 4; ++k) {
      const bool masked = (t == 1 || t == 2) || k == 3;
      CHECK(m(t, k) == (masked ? mean : f(t, k)));
    }
  CHECK(ApplyMasks(f, {0, 0}, {0, 0}) == f);
}

TEST_CASE("spec augment widths stay within bounds") {
  AugmentConfig c;
  FeatureMatrix f(200, 80);
  for (int i = 0; i < f.size(); ++i) f.data()[i] = static_cast<float>(i % 977);
  Rng rng(5);
  int max_t = 0, max_f = 0;
  for (int trial = 0; trial < 300; ++trial) {
    AugmentTrace trace;
    const FeatureMatrix m = SpecAugment(f, c, rng, &trace);
    CHECK(trace.spec_augment == 1);
    int rows = 0, cols = 0;
    for (int t = 0; t < m.rows(); ++t) rows += (m.row(t).array() != f.row(t).array()).all();
    for (int k = 0; k < m.cols(); ++k) cols += (m.col(k).array() != f.col(k).array()).all();
    max_t = std::max(max_t, rows);
    max_f = std::max(max_f, cols);
  }
  CHECK(max_t <= 10);
  CHECK(max_f <= 6);
  CHECK(max_t >= 8);  // the full range is reachable
  CHECK(max_f >= 5);
}

TEST_CASE("multi-crop: view shapes, traces and determinism") {
  const Waveform w = Noise(5 * 16000, 11);
  Fbank fb(FbankConfig{}, 16000);
  AugmentConfig aug;
  aug.noise_prob = 1.0;
  aug.rir_prob = 1.0;
  AugmentSources src(aug, 16000);
  Rng r1(3), r2(3);
  const CropSet a = SampleMultiCrop(w, "u", aug, src, fb, CropConfig{}, r1);
  const CropSet b = SampleMultiCrop(w, "u", aug, src, fb, CropConfig{}, r2);
  CHECK(a.global.rows() == 398);
  CHECK(a.global_trace.total() == 0);
  for (int v = 0; v < kNumLocalViews; ++v) {
    CHECK(a.locals[v].rows() == 198);
    CHECK(a.local_traces[v].mix_noise == 1);
    CHECK(a.local_traces[v].rir == 1);
    CHECK(a.local_traces[v].spec_augment == 1);
    CHECK(a.locals[v] == b.locals[v]);
  }
  CHECK(a.global == b.global);

  AugmentConfig off;
  off.wav_augment = false;
  off.spec_augment = false;
  Rng r3(3);
  const CropSet c = SampleMultiCrop(w, "u", off, src, fb, CropConfig{}, r3);
  CHECK(c.LocalTraceTotal().total() == 0);
}

TEST_CASE("multi-crop: the global view is an unaugmented slice") {
  const Waveform w = Noise(5 * 16000, 12);
  Fbank fb(FbankConfig{}, 16000);
  AugmentConfig aug;
  AugmentSources src(aug, 16000);
  Rng rng(8);
  const CropSet s = SampleMultiCrop(w, "u", aug, src, fb, CropConfig{}, rng);
  // Some 4 s slice of the utterance produces exactly these features.
  bool found = false;
  for (long start = 0; start + 64000 <= 80000 && !found; ++start) {
    const FeatureMatrix first = fb.Compute(Segment(w, start, 400));
    if (first.row(0) == s.global.row(0))
      found = fb.Compute(Segment(w, start, 64000)) == s.global;
  }
  CHECK(found);
}

TEST_CASE("segment wraps around short utterances") {
  Waveform w;
  w.samples = {1, 2, 3};
  const Waveform s = Segment(w, 2, 5);
  CHECK(s.samples == std::vector<double>{3, 1, 2, 3, 1});
  const Waveform short_wave = Noise(3 * 16000, 1);
  Fbank fb(FbankConfig{}, 16000);
  AugmentSources src(AugmentConfig{}, 16000);
  Rng rng(1);
  const CropSet c = SampleMultiCrop(short_wave, "short", AugmentConfig{}, src, fb,
                                    CropConfig{}, rng);
  CHECK(c.global.rows() == 398);
}

TEST_CASE("augment sources: corpus directories") {
  sdpn::testing::TempDir dir("aug");
  std::filesystem::create_directories(dir / "noise");
  AugmentConfig c;
  c.noise_source = NoiseSourceKind::kCorpusDir;
  c.noise_dir = dir / "noise";
  CHECK_THROWS_AS(AugmentSources(c, 16000), ConfigError);
  dataio::WriteWav(Noise(1000, 2), dir / "noise" / "n1.wav");
  AugmentSources src(c, 16000);
  Rng rng(0);
  CHECK(src.Noise(50, rng).samples.size() == 1000);
  c.noise_dir.clear();
  CHECK_THROWS_AS(ValidateAugmentConfig(c), ConfigError);
  AugmentConfig bad;
  bad.snr_min_db = 20;
  CHECK_THROWS_AS(ValidateAugmentConfig(bad), ConfigError);
}
