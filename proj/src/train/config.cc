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

#include "sdpn/train/config.h"

#include <nlohmann/json.hpp>

#include "sdpn/error.h"

namespace sdpn::train {

using nlohmann::json;

LrSchedule TrainConfig::Schedule() const {
  LrSchedule s;
  s.epochs = epochs;
  s.warmup_epochs = warmup_epochs >= 0 ? warmup_epochs : ScaledWarmupEpochs(epochs);
  s.peak_lr = peak_lr;
  s.final_lr = final_lr;
  return s;
}

TrainConfig FullConfig() {
  TrainConfig c;
  c.epochs = 150;
  c.warmup_epochs = 10.0;
  return c;
}

TrainConfig DeskConfig() {
  TrainConfig c;
  c.epochs = 20;
  c.batch_size = 32;
  c.net.encoder.channels = {32, 32, 32};
  c.net.head = {256, 256, 64};
  c.sdpn.n_prototypes = 64;
  return c;
}

void ValidateTrainConfig(const TrainConfig &c) {
  if (c.epochs < 1) throw ConfigError("epochs must be >= 1");
  if (c.batch_size < 2) throw ConfigError("batch size must be >= 2");
  ValidateLrSchedule(c.Schedule());
  if (!(c.sgd.momentum >= 0 && c.sgd.momentum < 1))
    throw ConfigError("momentum must lie in [0, 1)");
  if (!(c.sgd.weight_decay >= 0)) throw ConfigError("weight decay must be >= 0");
  if (!(c.ema_m0 >= 0 && c.ema_m0 <= 1)) throw ConfigError("EMA m0 must lie in [0, 1]");
  if (c.sample_rate <= 0) throw ConfigError("sample rate must be positive");
  net::ValidateNetworkConfig(c.net);
  if (c.net.encoder.input_dim != c.fbank.n_mels)
    throw ConfigError("encoder input dim must equal the number of mel bins");
  core::ValidateSdpnConfig(c.sdpn);
  pipeline::ValidateFbankConfig(c.fbank, c.sample_rate);
  pipeline::ValidateAugmentConfig(c.augment);
  pipeline::ValidateCropConfig(c.crop);
}

namespace {

json ToJson(const TrainConfig &c) {
  const auto &e = c.net.encoder;
  const auto &a = c.augment;
  return json{
      {"epochs", c.epochs},
      {"batch_size", c.batch_size},
      {"peak_lr", c.peak_lr},
      {"final_lr", c.final_lr},
      {"warmup_epochs", c.warmup_epochs},
      {"momentum", c.sgd.momentum},
      {"weight_decay", c.sgd.weight_decay},
      {"ema_m0", c.ema_m0},
      {"seed", c.seed},
      {"sample_rate", c.sample_rate},
      {"encoder",
       {{"input_dim", e.input_dim},
        {"channels", e.channels},
        {"kernels", e.kernels},
        {"dilations", e.dilations},
        {"embed_dim", e.embed_dim}}},
      {"head",
       {{"hidden1", c.net.head.hidden1},
        {"hidden2", c.net.head.hidden2},
        {"out_dim", c.net.head.out_dim}}},
      {"sdpn",
       {{"tau_t", c.sdpn.temps.teacher},
        {"tau_s", c.sdpn.temps.student},
        {"sinkhorn_iters", c.sdpn.sinkhorn.n_iters},
        {"sinkhorn_eps", c.sdpn.sinkhorn.eps},
        {"mu", c.sdpn.mu},
        {"n_prototypes", c.sdpn.n_prototypes},
        {"use_prototypes", c.sdpn.use_prototypes},
        {"dr_floor", c.sdpn.dr_floor},
        {"dr_literal", c.sdpn.dr_literal}}},
      {"fbank",
       {{"n_mels", c.fbank.n_mels},
        {"win_length_ms", c.fbank.win_length_ms},
        {"hop_length_ms", c.fbank.hop_length_ms},
        {"n_fft", c.fbank.n_fft},
        {"fmin", c.fbank.fmin},
        {"fmax", c.fbank.fmax},
        {"log_floor", c.fbank.log_floor},
        {"preemph", c.fbank.preemph}}},
      {"augment",
       {{"wav_augment", a.wav_augment},
        {"spec_augment", a.spec_augment},
        {"snr_min_db", a.snr_min_db},
        {"snr_max_db", a.snr_max_db},
        {"noise_prob", a.noise_prob},
        {"rir_prob", a.rir_prob},
        {"noise_dir", a.noise_source == pipeline::NoiseSourceKind::kCorpusDir
                          ? a.noise_dir.string() : std::string()},
        {"rir_dir", a.rir_source == pipeline::RirSourceKind::kCorpusDir
                        ? a.rir_dir.string() : std::string()},
        {"synthetic_rt60_s", a.synthetic_rt60_s},
        {"time_mask_max", a.time_mask_max},
        {"freq_mask_max", a.freq_mask_max}}},
      {"crop", {{"global_s", c.crop.global_s}, {"local_s", c.crop.local_s}}},
  };
}

}  // namespace

std::string TrainConfigToJson(const TrainConfig &config) {
  return ToJson(config).dump(2);
}

TrainConfig TrainConfigFromJson(const std::string &text) {
  try {
    const json j = json::parse(text);
    TrainConfig c;
    c.epochs = j.at("epochs");
    c.batch_size = j.at("batch_size");
    c.peak_lr = j.at("peak_lr");
    c.final_lr = j.at("final_lr");
    c.warmup_epochs = j.at("warmup_epochs");
    c.sgd.momentum = j.at("momentum");
    c.sgd.weight_decay = j.at("weight_decay");
    c.ema_m0 = j.at("ema_m0");
    c.seed = j.at("seed");
    c.sample_rate = j.at("sample_rate");
    const auto &e = j.at("encoder");
    c.net.encoder.input_dim = e.at("input_dim");
    c.net.encoder.channels = e.at("channels").get<std::vector<int>>();
    c.net.encoder.kernels = e.at("kernels").get<std::vector<int>>();
    c.net.encoder.dilations = e.at("dilations").get<std::vector<int>>();
    c.net.encoder.embed_dim = e.at("embed_dim");
    const auto &h = j.at("head");
    c.net.head.hidden1 = h.at("hidden1");
    c.net.head.hidden2 = h.at("hidden2");
    c.net.head.out_dim = h.at("out_dim");
    const auto &s = j.at("sdpn");
    c.sdpn.temps.teacher = s.at("tau_t");
    c.sdpn.temps.student = s.at("tau_s");
    c.sdpn.sinkhorn.n_iters = s.at("sinkhorn_iters");
    c.sdpn.sinkhorn.eps = s.at("sinkhorn_eps");
    c.sdpn.mu = s.at("mu");
    c.sdpn.n_prototypes = s.at("n_prototypes");
    c.sdpn.use_prototypes = s.at("use_prototypes");
    c.sdpn.dr_floor = s.at("dr_floor");
    c.sdpn.dr_literal = s.at("dr_literal");
    const auto &f = j.at("fbank");
    c.fbank.n_mels = f.at("n_mels");
    c.fbank.win_length_ms = f.at("win_length_ms");
    c.fbank.hop_length_ms = f.at("hop_length_ms");
    c.fbank.n_fft = f.at("n_fft");
    c.fbank.fmin = f.at("fmin");
    c.fbank.fmax = f.at("fmax");
    c.fbank.log_floor = f.at("log_floor");
    c.fbank.preemph = f.at("preemph");
    const auto &a = j.at("augment");
    c.augment.wav_augment = a.at("wav_augment");
    c.augment.spec_augment = a.at("spec_augment");
    c.augment.snr_min_db = a.at("snr_min_db");
    c.augment.snr_max_db = a.at("snr_max_db");
    c.augment.noise_prob = a.at("noise_prob");
    c.augment.rir_prob = a.at("rir_prob");
    const std::string noise_dir = a.at("noise_dir"), rir_dir = a.at("rir_dir");
    if (!noise_dir.empty()) {
      c.augment.noise_source = pipeline::NoiseSourceKind::kCorpusDir;
      c.augment.noise_dir = noise_dir;
    }
    if (!rir_dir.empty()) {
      c.augment.rir_source = pipeline::RirSourceKind::kCorpusDir;
      c.augment.rir_dir = rir_dir;
    }
    c.augment.synthetic_rt60_s = a.at("synthetic_rt60_s");
    c.augment.time_mask_max = a.at("time_mask_max");
    c.augment.freq_mask_max = a.at("freq_mask_max");
    c.crop.global_s = j.at("crop").at("global_s");
    c.crop.local_s = j.at("crop").at("local_s");
    return c;
  } catch (const json::exception &ex) {
    throw ConfigError(std::string("bad config snapshot: ") + ex.what());
  }
}

namespace {

void CheckKnownKeys(const json &patch, const json &known, const std::string &where) {
  for (auto it = patch.begin(); it != patch.end(); ++it) {
    const std::string key = where.empty() ? it.key() : where + "." + it.key();
    if (!known.contains(it.key())) throw ConfigError("unknown config key '" + key + "'");
    if (it->is_object() && known.at(it.key()).is_object())
      CheckKnownKeys(*it, known.at(it.key()), key);
  }
}

}  // namespace

TrainConfig MergeTrainConfig(const TrainConfig &base, const std::string &json_patch) {
  json patch;
  try {
    patch = json::parse(json_patch);
  } catch (const json::exception &ex) {
    throw ConfigError(std::string("config is not valid JSON: ") + ex.what());
  }
  if (!patch.is_object()) throw ConfigError("config must be a JSON object");
  json merged = ToJson(base);
  CheckKnownKeys(patch, merged, "");
  merged.merge_patch(patch);
  TrainConfig out = TrainConfigFromJson(merged.dump());
  ValidateTrainConfig(out);
  return out;
}

void RequireSameArchitecture(const TrainConfig &a, const TrainConfig &b) {
  const auto &ea = a.net.encoder, &eb = b.net.encoder;
  const bool same = ea.input_dim == eb.input_dim && ea.channels == eb.channels &&
                    ea.kernels == eb.kernels && ea.dilations == eb.dilations &&
                    ea.embed_dim == eb.embed_dim &&
                    a.net.head.hidden1 == b.net.head.hidden1 &&
                    a.net.head.hidden2 == b.net.head.hidden2 &&
                    a.net.head.out_dim == b.net.head.out_dim &&
                    a.sdpn.use_prototypes == b.sdpn.use_prototypes &&
                    (!a.sdpn.use_prototypes || a.sdpn.n_prototypes == b.sdpn.n_prototypes);
  if (!same) throw ConfigError("checkpoint architecture does not match the config");
}

}  // namespace sdpn::train
