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

#ifndef SDPN_CORE_SELF_CHECK_H_
#define SDPN_CORE_SELF_CHECK_H_

#include <cstdint>

#include "sdpn/core/sdpn.h"
#include "sdpn/net/grad_check.h"

namespace sdpn::core {

/// Tiny double-precision setup for checking the gradient of the full loss.
struct TinyCheckConfig {
  int n_mels = 8;
  int channels = 8;
  int embed_dim = 512;
  int hidden = 16;
  int out_dim = 8;
  int n_prototypes = 16;
  int batch = 4;
  int global_frames = 40;
  int local_frames = 24;
  double mu = 0.1;
  uint64_t seed = 7;
  // Central differences at eps 1e-5 on an O(1) loss resolve about 1e-10,
  // so gradients below 1e-6 are held to an absolute 1e-10 instead.
  double abs_floor = 1e-6;
  double eps = 1e-5;
  int n_probe = 0;  // <= 0 probes every scalar
};

/// Builds the tiny model on random features, computes the analytic gradient
/// of l_ce + mu * l_dr with the teacher targets held fixed and compares it
/// with central differences over every student parameter and the prototypes.
net::GradCheckResult RunTinyGradCheck(const TinyCheckConfig &config = {});

}  // namespace sdpn::core

#endif  // SDPN_CORE_SELF_CHECK_H_
