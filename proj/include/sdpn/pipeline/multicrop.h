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

#ifndef SDPN_PIPELINE_MULTICROP_H_
#define SDPN_PIPELINE_MULTICROP_H_

#include <array>
#include <string>

#include "sdpn/pipeline/augment.h"
#include "sdpn/pipeline/fbank.h"

namespace sdpn::pipeline {

inline constexpr int kNumLocalViews = 4;

struct CropConfig {
  double global_s = 4.0;
  double local_s = 2.0;
};

void ValidateCropConfig(const CropConfig &config);

/// One unaugmented global view and kNumLocalViews augmented local views of
/// the same utterance.
struct CropSet {
  std::string utterance_id;
  FeatureMatrix global;
  std::array<FeatureMatrix, kNumLocalViews> locals;
  AugmentTrace global_trace;
  std::array<AugmentTrace, kNumLocalViews> local_traces;

  AugmentTrace LocalTraceTotal() const {
    AugmentTrace t;
    for (const auto &l : local_traces) t += l;
    return t;
  }
};

/// Samples the views of one utterance. Segments are placed uniformly and
/// independently. Utterances shorter than the global view are extended by
/// wrap-around. Locals optionally get noise (p = noise_prob), reverberation
/// (independent, p = rir_prob) and SpecAugment; the global view never does.
CropSet SampleMultiCrop(const dataio::Waveform &wave,
                        const std::string &utterance_id,
                        const AugmentConfig &aug, const AugmentSources &sources,
                        const Fbank &fbank, const CropConfig &crop, Rng &rng);

/// Copies `length` samples starting at `start`, wrapping around the end.
dataio::Waveform Segment(const dataio::Waveform &wave, long start, long length);

}  // namespace sdpn::pipeline

#endif  // SDPN_PIPELINE_MULTICROP_H_
