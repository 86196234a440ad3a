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

#ifndef SDPN_TRAIN_CONFIG_H_
#define SDPN_TRAIN_CONFIG_H_

#include <cstdint>
#include <string>

#include "sdpn/core/sdpn.h"
#include "sdpn/pipeline/augment.h"
#include "sdpn/pipeline/fbank.h"
#include "sdpn/pipeline/multicrop.h"
#include "sdpn/train/optimizer.h"
#include "sdpn/train/schedule.h"

namespace sdpn::train {

struct TrainConfig {
  int epochs = 20;
  int batch_size = 32;
  double peak_lr = 0.4;
  double final_lr = 1e-5;
  // Negative: scale the reference 10-of-150 warmup to `epochs`.
  double warmup_epochs = -1.0;
  SgdConfig sgd;
  double ema_m0 = 0.996;
  uint64_t seed = 1;
  int sample_rate = 16000;

  net::NetworkConfig net;
  core::SdpnConfig sdpn;
  pipeline::FbankConfig fbank;
  pipeline::AugmentConfig augment;
  pipeline::CropConfig crop;

  LrSchedule Schedule() const;
};

/// Full-size settings: 150 epochs, 10 warmup epochs, 128-channel TDNN,
/// 2048-2048-256 head, 1024 prototypes.
TrainConfig FullConfig();

/// Small settings used by the desk-scale experiments.
TrainConfig DeskConfig();

void ValidateTrainConfig(const TrainConfig &config);

std::string TrainConfigToJson(const TrainConfig &config);
TrainConfig TrainConfigFromJson(const std::string &json);

/// Applies a partial JSON object (same layout as the snapshot) on top of
/// `base`. Unknown keys are a ConfigError.
TrainConfig MergeTrainConfig(const TrainConfig &base, const std::string &json_patch);

/// Throws ConfigError if the two configs describe different model shapes.
void RequireSameArchitecture(const TrainConfig &a, const TrainConfig &b);

}  // namespace sdpn::train

#endif  // SDPN_TRAIN_CONFIG_H_
