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

#ifndef SDPN_TRAIN_TRAINER_H_
#define SDPN_TRAIN_TRAINER_H_

#include <filesystem>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "sdpn/core/sdpn.h"
#include "sdpn/dataio/manifest.h"
#include "sdpn/train/checkpoint.h"
#include "sdpn/train/config.h"
#include "sdpn/train/metrics_log.h"
#include "sdpn/train/optimizer.h"

namespace sdpn::train {

using Model = core::SdpnModel<float>;

struct StepInfo {
  const MetricsRecord &record;
  const Model &model;
  std::span<const pipeline::CropSet *const> batch;
};

struct TrainOptions {
  // Stop after this many completed epochs (simulates an interruption).
  int stop_after_epoch = -1;
  bool write_checkpoints = true;
  bool log_progress = true;
  std::function<void(const StepInfo &)> on_step;
};

struct TrainResult {
  Checkpoint checkpoint;  // state after the last completed epoch
  std::vector<MetricsRecord> log;
  pipeline::AugmentTrace global_augment;
  pipeline::AugmentTrace local_augment;
  int64_t steps = 0;
  std::vector<std::filesystem::path> checkpoint_paths;
};

/// Number of optimizer steps per epoch: full batches plus a final partial
/// batch when it holds at least two utterances.
int StepsPerEpoch(int n_utterances, int batch_size);

std::filesystem::path EpochCheckpointPath(const std::filesystem::path &dir,
                                          int64_t epoch);

Checkpoint MakeCheckpoint(Model &model, const Sgd<float> &sgd, int64_t epoch,
                          int64_t step, const std::string &rng_state,
                          const TrainConfig &config);

/// Loads model tensors (and optimizer buffers when `sgd` is given).
void RestoreModel(const Checkpoint &ckpt, Model *model, Sgd<float> *sgd = nullptr);

/// Builds a model from the checkpoint's config snapshot and tensors.
Model ModelFromCheckpoint(const Checkpoint &ckpt);

class Trainer {
 public:
  Trainer(dataio::Manifest manifest, TrainConfig config,
          std::filesystem::path out_dir);

  /// Continues from a checkpoint written by an identically configured run.
  void Resume(const Checkpoint &ckpt);

  TrainResult Run(const TrainOptions &options = {});

  Model &model() { return model_; }
  const TrainConfig &config() const { return config_; }

 private:
  dataio::Manifest manifest_;
  TrainConfig config_;
  std::filesystem::path out_dir_;
  Model model_;
  Sgd<float> sgd_;
  Rng shuffle_rng_;
  int64_t epoch_ = 0;
  int64_t step_ = 0;
};

}  // namespace sdpn::train

#endif  // SDPN_TRAIN_TRAINER_H_
