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

#include "sdpn/train/trainer.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "sdpn/dataio/wav.h"
#include "sdpn/error.h"

namespace sdpn::train {

namespace fs = std::filesystem;
using net::Matrix;

namespace {

NamedTensor ToTensor(const std::string &name, const Matrix<float> &m) {
  NamedTensor t;
  t.name = name;
  t.shape = {static_cast<int64_t>(m.rows()), static_cast<int64_t>(m.cols())};
  t.data.assign(m.data(), m.data() + m.size());
  return t;
}

void FromTensor(const Checkpoint &ckpt, const std::string &name, Matrix<float> *m) {
  const NamedTensor *t = ckpt.Find(name);
  if (!t) throw IntegrityError("checkpoint is missing tensor " + name);
  if (t->shape.size() != 2 || t->shape[0] != m->rows() || t->shape[1] != m->cols())
    throw ShapeError("checkpoint tensor " + name + " has the wrong shape");
  std::copy(t->data.begin(), t->data.end(), m->data());
}

template <typename F>
void ForEachState(Model &model, F &&f) {
  for (auto &[name, p] : model.student.Params()) f("student." + name, p->value);
  for (auto &[name, b] : model.student.Buffers()) f("student." + name, *b);
  for (auto &[name, p] : model.teacher.Params()) f("teacher." + name, p->value);
  for (auto &[name, b] : model.teacher.Buffers()) f("teacher." + name, *b);
  f(std::string("prototypes"), model.prototypes.value);
}

std::string RngState(const Rng &rng) {
  std::ostringstream os;
  os << rng;
  return os.str();
}

void WriteNanDump(const fs::path &path, int64_t epoch, int64_t step,
                  const core::LossBreakdown &loss,
                  std::span<const pipeline::CropSet *const> batch) {
  std::ofstream out(path);
  out << "epoch=" << epoch << " step=" << step << '\n';
  out << fmt::format("l_ce={} l_dr={} mu={} total={}\n", loss.l_ce, loss.l_dr,
                     loss.mu, loss.total);
  for (const auto *c : batch) out << c->utterance_id << '\n';
}

}  // namespace

int StepsPerEpoch(int n_utterances, int batch_size) {
  if (batch_size < 2) throw ConfigError("batch size must be at least 2");
  const int full = n_utterances / batch_size;
  const int rest = n_utterances % batch_size;
  return full + (rest >= 2 ? 1 : 0);
}

fs::path EpochCheckpointPath(const fs::path &dir, int64_t epoch) {
  return dir / fmt::format("ckpt-epoch-{:03d}.bin", epoch);
}

Checkpoint MakeCheckpoint(Model &model, const Sgd<float> &sgd, int64_t epoch,
                          int64_t step, const std::string &rng_state,
                          const TrainConfig &config) {
  Checkpoint ckpt;
  ckpt.epoch = epoch;
  ckpt.step = step;
  ckpt.config_json = TrainConfigToJson(config);
  ckpt.rng_state = rng_state;
  ForEachState(model, [&](const std::string &name, Matrix<float> &m) {
    ckpt.tensors.push_back(ToTensor(name, m));
  });
  for (const auto &[name, v] : sgd.buffers())
    ckpt.tensors.push_back(ToTensor("optim." + name, v));
  return ckpt;
}

void RestoreModel(const Checkpoint &ckpt, Model *model, Sgd<float> *sgd) {
  ForEachState(*model, [&](const std::string &name, Matrix<float> &m) {
    FromTensor(ckpt, name, &m);
  });
  if (!sgd) return;
  sgd->buffers().clear();
  const std::string prefix = "optim.";
  for (const auto &t : ckpt.tensors) {
    if (t.name.rfind(prefix, 0) != 0) continue;
    if (t.shape.size() != 2) throw ShapeError("bad optimizer tensor " + t.name);
    Matrix<float> v(t.shape[0], t.shape[1]);
    std::copy(t.data.begin(), t.data.end(), v.data());
    sgd->buffers()[t.name.substr(prefix.size())] = std::move(v);
  }
}

Model ModelFromCheckpoint(const Checkpoint &ckpt) {
  const TrainConfig config = TrainConfigFromJson(ckpt.config_json);
  Model model(config.net, config.sdpn, config.seed);
  RestoreModel(ckpt, &model);
  return model;
}

Trainer::Trainer(dataio::Manifest manifest, TrainConfig config, fs::path out_dir)
    : manifest_(std::move(manifest)),
      config_(std::move(config)),
      out_dir_(std::move(out_dir)),
      sgd_(config_.sgd) {
  ValidateTrainConfig(config_);
  if (StepsPerEpoch(static_cast<int>(manifest_.size()), config_.batch_size) == 0)
    throw ValidationError("manifest has fewer than 2 utterances");
  model_ = Model(config_.net, config_.sdpn, config_.seed);
  shuffle_rng_.seed(StreamSeed(config_.seed, {20}));
}

void Trainer::Resume(const Checkpoint &ckpt) {
  const TrainConfig saved = TrainConfigFromJson(ckpt.config_json);
  RequireSameArchitecture(config_, saved);
  RestoreModel(ckpt, &model_, &sgd_);
  std::istringstream is(ckpt.rng_state);
  is >> shuffle_rng_;
  if (!is) throw IntegrityError("checkpoint has an unreadable rng state");
  epoch_ = ckpt.epoch;
  step_ = ckpt.step;
}

TrainResult Trainer::Run(const TrainOptions &options) {
  fs::create_directories(out_dir_);
  {
    std::ofstream cfg(out_dir_ / "config.json");
    cfg << TrainConfigToJson(config_) << '\n';
  }
  MetricsLog log(out_dir_ / "metrics.log");
  log.TruncateAfter(step_);

  const int n = static_cast<int>(manifest_.size());
  const int per_epoch = StepsPerEpoch(n, config_.batch_size);
  const int64_t total_steps = static_cast<int64_t>(per_epoch) * config_.epochs;
  const LrSchedule schedule = config_.Schedule();
  const pipeline::Fbank fbank(config_.fbank, config_.sample_rate);
  const pipeline::AugmentSources sources(config_.augment, config_.sample_rate);

  TrainResult result;
  std::vector<int> order(n);

  while (epoch_ < config_.epochs) {
    if (options.stop_after_epoch >= 0 && epoch_ >= options.stop_after_epoch) break;
    // The epoch order depends only on the rng state, so resume sees it too.
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), shuffle_rng_);
    for (int s = 0; s < per_epoch; ++s) {
      const auto t0 = std::chrono::steady_clock::now();
      const int begin = s * config_.batch_size;
      const int end = std::min(n, begin + config_.batch_size);
      std::vector<pipeline::CropSet> crops;
      crops.reserve(end - begin);
      for (int i = begin; i < end; ++i) {
        const auto &entry = manifest_.entries[order[i]];
        const dataio::Waveform wave = dataio::ReadWav(manifest_.Resolve(entry));
        if (wave.sample_rate != config_.sample_rate)
          throw ValidationError(fmt::format("{} has sample rate {}, expected {}",
                                            entry.utterance_id, wave.sample_rate,
                                            config_.sample_rate));
        Rng rng(StreamSeed(config_.seed, {30, static_cast<uint64_t>(epoch_),
                                          static_cast<uint64_t>(order[i])}));
        crops.push_back(pipeline::SampleMultiCrop(wave, entry.utterance_id,
                                                  config_.augment, sources, fbank,
                                                  config_.crop, rng));
        result.global_augment += crops.back().global_trace;
        result.local_augment += crops.back().LocalTraceTotal();
      }
      std::vector<const pipeline::CropSet *> batch;
      for (const auto &c : crops) batch.push_back(&c);

      const double lr = LrAt(epoch_ + static_cast<double>(s) / per_epoch, schedule);
      const core::LossBreakdown loss = model_.Forward(batch);
      if (!std::isfinite(loss.total)) {
        WriteNanDump(out_dir_ / "nan_dump.txt", epoch_, step_ + 1, loss, batch);
        throw NumericError(fmt::format("non-finite loss at step {}; see {}", step_ + 1,
                                       (out_dir_ / "nan_dump.txt").string()));
      }
      const auto grads = model_.Backward();
      sgd_.Step(model_.TrainableParams(), grads, lr);
      if (config_.sdpn.use_prototypes) model_.NormalizePrototypes();
      ++step_;
      const double m = core::EmaMomentum(step_, total_steps, config_.ema_m0);
      core::EmaUpdate(&model_.teacher, model_.student, m);

      MetricsRecord rec;
      rec.step = step_;
      rec.epoch = epoch_;
      rec.lr = lr;
      rec.m_ema = m;
      rec.l_ce = loss.l_ce;
      rec.l_dr = loss.l_dr;
      rec.total = loss.total;
      rec.wall_ms = std::chrono::duration<double, std::milli>(
                        std::chrono::steady_clock::now() - t0)
                        .count();
      log.Append(rec);
      if (options.on_step) options.on_step(StepInfo{rec, model_, batch});
    }
    ++epoch_;
    result.checkpoint =
        MakeCheckpoint(model_, sgd_, epoch_, step_, RngState(shuffle_rng_), config_);
    if (options.write_checkpoints) {
      const fs::path path = EpochCheckpointPath(out_dir_, epoch_);
      SaveCheckpoint(result.checkpoint, path);
      result.checkpoint_paths.push_back(path);
    }
    if (options.log_progress) {
      const auto &r = log.records().back();
      spdlog::info("epoch {}/{} step {} lr {:.4g} l_ce {:.4f} l_dr {:.4f} total {:.4f}",
                   epoch_, config_.epochs, step_, r.lr, r.l_ce, r.l_dr, r.total);
    }
  }
  if (result.checkpoint.tensors.empty())
    result.checkpoint =
        MakeCheckpoint(model_, sgd_, epoch_, step_, RngState(shuffle_rng_), config_);
  result.log = log.records();
  result.steps = step_;
  return result;
}

}  // namespace sdpn::train
