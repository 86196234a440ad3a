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

#include "sdpn/train/schedule.h"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "sdpn/error.h"

namespace sdpn::train {

void ValidateLrSchedule(const LrSchedule &s) {
  if (!(s.epochs > 0)) throw ConfigError("epochs must be positive");
  if (!(s.warmup_epochs >= 0) || !(s.warmup_epochs < s.epochs))
    throw ConfigError("warmup must be shorter than training");
  if (!(s.final_lr >= 0) || !(s.peak_lr > s.final_lr))
    throw ConfigError("need peak_lr > final_lr >= 0");
}

double LrAt(double epoch_frac, const LrSchedule &s) {
  const double t = std::clamp(epoch_frac, 0.0, s.epochs);
  if (t < s.warmup_epochs) return s.peak_lr * t / s.warmup_epochs;
  const double progress = (t - s.warmup_epochs) / (s.epochs - s.warmup_epochs);
  return s.final_lr +
         (s.peak_lr - s.final_lr) * 0.5 * (1.0 + std::cos(std::numbers::pi * progress));
}

double ScaledWarmupEpochs(double epochs, double reference_warmup,
                          double reference_epochs) {
  return reference_warmup * epochs / reference_epochs;
}

}  // namespace sdpn::train
