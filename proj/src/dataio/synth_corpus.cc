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

#include "sdpn/dataio/synth_corpus.h"

#include <cmath>
#include <cstdio>
#include <numbers>

#include "sdpn/error.h"
#include "sdpn/random.h"

namespace sdpn::dataio {

namespace {

constexpr double kMinF0 = 90.0;
constexpr double kMaxF0 = 300.0;
constexpr double kJitter = 0.03;
constexpr double kNoiseFloorDb = -30.0;
constexpr double kTargetRms = 0.1;

double Rms(const std::vector<double> &x) {
  double acc = 0.0;
  for (double v : x) acc += v * v;
  return std::sqrt(acc / static_cast<double>(x.size()));
}

std::string SpeakerId(int s) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "spk%03d", s);
  return buf;
}

std::string UtteranceId(int s, int u) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "spk%03d-utt%03d", s, u);
  return buf;
}

}  // namespace

void ValidateSynthConfig(const SynthCorpusConfig &config) {
  if (config.n_speakers < 1 || config.utts_per_speaker < 1)
    throw ConfigError("synthetic corpus needs at least one speaker and one "
                      "utterance per speaker");
  if (config.sample_rate <= 0) throw ConfigError("sample rate must be positive");
  if (!(config.utt_duration_s >= config.min_duration_s))
    throw ConfigError("utterance duration must cover a global view");
}

SpeakerProfile MakeSpeakerProfile(uint64_t seed, int speaker_index,
                                  int sample_rate) {
  Rng rng(StreamSeed(seed, {1, static_cast<uint64_t>(speaker_index)}));
  SpeakerProfile p;
  p.f0_hz = Uniform(rng, kMinF0, kMaxF0);
  const int n_harm =
      static_cast<int>(std::floor(0.5 * sample_rate / (kMinF0 * (1 - kJitter))));
  const double tilt = Uniform(rng, 0.6, 1.4);
  p.harmonic_gain.resize(n_harm);
  for (int h = 0; h < n_harm; ++h)
    p.harmonic_gain[h] =
        std::pow(h + 1.0, -tilt) * std::exp(0.5 * Gaussian(rng));
  p.resonance_hz = Uniform(rng, 400.0, 3000.0);
  p.resonance_bw_hz = Uniform(rng, 80.0, 300.0);
  return p;
}

Waveform SynthesizeUtterance(const SpeakerProfile &profile, uint64_t seed,
                             int speaker_index, int utt_index,
                             double duration_s, int sample_rate) {
  Rng rng(StreamSeed(seed, {2, static_cast<uint64_t>(speaker_index),
                            static_cast<uint64_t>(utt_index)}));
  const size_t n = static_cast<size_t>(std::llround(duration_s * sample_rate));
  if (n == 0) throw ConfigError("utterance duration rounds to zero samples");
  const double f0 = profile.f0_hz * (1.0 + Uniform(rng, -kJitter, kJitter));
  const double nyquist = 0.5 * sample_rate;

  std::vector<double> source(n, 0.0);
  const double two_pi = 2.0 * std::numbers::pi;
  for (size_t h = 0; h < profile.harmonic_gain.size(); ++h) {
    const double freq = f0 * static_cast<double>(h + 1);
    const double phase = Uniform(rng, 0.0, two_pi);
    if (freq >= 0.95 * nyquist) continue;
    // Phasor recurrence instead of one sin() per sample.
    const double w = two_pi * freq / sample_rate;
    const double g = profile.harmonic_gain[h];
    const double cw = std::cos(w), sw = std::sin(w);
    double re = std::cos(phase), im = std::sin(phase);
    for (size_t t = 0; t < n; ++t) {
      source[t] += g * im;
      const double next_re = re * cw - im * sw;
      im = re * sw + im * cw;
      re = next_re;
    }
  }

  // Two-pole resonator.
  const double r = std::exp(-std::numbers::pi * profile.resonance_bw_hz /
                            sample_rate);
  const double theta = two_pi * profile.resonance_hz / sample_rate;
  const double a1 = 2.0 * r * std::cos(theta), a2 = -r * r;
  std::vector<double> resonated(n, 0.0);
  double y1 = 0.0, y2 = 0.0;
  for (size_t t = 0; t < n; ++t) {
    const double y = source[t] + a1 * y1 + a2 * y2;
    resonated[t] = y;
    y2 = y1;
    y1 = y;
  }

  const double src_rms = Rms(source), res_rms = Rms(resonated);
  Waveform wave;
  wave.sample_rate = sample_rate;
  wave.samples.resize(n);
  for (size_t t = 0; t < n; ++t)
    wave.samples[t] = source[t] / src_rms + resonated[t] / res_rms;
  const double scale = kTargetRms / Rms(wave.samples);
  const double noise_rms = kTargetRms * std::pow(10.0, kNoiseFloorDb / 20.0);
  for (auto &s : wave.samples) s = s * scale + noise_rms * Gaussian(rng);

  double peak = 0.0;
  for (double s : wave.samples) peak = std::max(peak, std::abs(s));
  if (peak > 0.9)
    for (auto &s : wave.samples) s *= 0.9 / peak;
  return wave;
}

Manifest GenerateSynthCorpus(const SynthCorpusConfig &config,
                             const std::filesystem::path &out_dir) {
  ValidateSynthConfig(config);
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create " + out_dir.string() + ": " + ec.message());

  Manifest manifest;
  manifest.base_dir = out_dir;
  for (int s = 0; s < config.n_speakers; ++s) {
    const SpeakerProfile profile =
        MakeSpeakerProfile(config.seed, s, config.sample_rate);
    for (int u = 0; u < config.utts_per_speaker; ++u) {
      Waveform wave = SynthesizeUtterance(profile, config.seed, s, u,
                                          config.utt_duration_s,
                                          config.sample_rate);
      const std::string utt = UtteranceId(s, u);
      const std::string file = utt + ".wav";
      WriteWav(wave, out_dir / file);
      manifest.entries.push_back(
          {utt, SpeakerId(s), file, wave.DurationSeconds()});
    }
  }
  SaveManifest(manifest, out_dir / "manifest.tsv");
  return manifest;
}

}  // namespace sdpn::dataio
