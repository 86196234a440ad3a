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

#ifndef SDPN_TRAIN_SCHEDULE_H_
#define SDPN_TRAIN_SCHEDULE_H_

namespace sdpn::train {

struct LrSchedule {
  double epochs = 150.0;
  double warmup_epochs = 10.0;
  double peak_lr = 0.4;
  double final_lr = 1e-5;
};

void ValidateLrSchedule(const LrSchedule &schedule);

/// Linear warmup from 0 to peak_lr, then cosine decay to final_lr at
/// `epochs`. epoch_frac is clamped to [0, epochs].
double LrAt(double epoch_frac, const LrSchedule &schedule);

/// Warmup length scaled so a shorter run keeps the 10/150 proportion.
double ScaledWarmupEpochs(double epochs, double reference_warmup = 10.0,
                          double reference_epochs = 150.0);

}  // namespace sdpn::train

#endif  // SDPN_TRAIN_SCHEDULE_H_
