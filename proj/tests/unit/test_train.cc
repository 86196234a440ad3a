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

#include "doctest.h"
#include "sdpn/dataio/synth_corpus.h"
#include "sdpn/error.h"
#include "sdpn/train/checkpoint.h"
#include "sdpn/train/config.h"
#include "sdpn/train/metrics_log.h"
#include "sdpn/train/optimizer.h"
#include "sdpn/train/schedule.h"
#include "sdpn/train/trainer.h"
#include "test_util.h"

using namespace sdpn;
using namespace sdpn::train;
namespace fs = std::filesystem;

namespace {

TrainConfig TinyConfig() {
  TrainConfig c = DeskConfig();
  c.epochs = 2;
  c.batch_size = 4;
  c.net.encoder.channels = {8, 8, 8};
  c.net.head = {16, 16, 8};
  c.sdpn.n_prototypes = 16;
  return c;
}

dataio::Manifest TinyCorpus(const fs::path &dir) {
  dataio::SynthCorpusConfig sc;
  sc.n_speakers = 3;
  sc.utts_per_speaker = 3;
  return dataio::GenerateSynthCorpus(sc, dir);
}

TrainOptions Quiet() {
  TrainOptions o;
  o.log_progress = false;
  return o;
}

Checkpoint SmallCheckpoint() {
  Checkpoint c;
  c.epoch = 3;
  c.step = 42;
  c.config_json = "{\"a\":1}";
  c.rng_state = "123 456";
  c.tensors.push_back({"w", {2, 3}, {1, 2, 3, 4, 5, 6}});
  c.tensors.push_back({"b", {3}, {-1.5f, 0.0f, 7.25f}});
  return c;
}

}  // namespace

TEST_CASE("learning-rate schedule fixtures") {
  const LrSchedule s;  // 150 epochs, 10 warmup, peak 0.4, final 1e-5
  CHECK(LrAt(0.0, s) == 0.0);
  CHECK(LrAt(10.0, s) == 0.4);
  CHECK(LrAt(150.0, s) == 1e-5);
  CHECK(std::abs(LrAt(80.0, s) - 0.200005) < 1e-6);
  CHECK(LrAt(5.0, s) == doctest::Approx(0.2));
  CHECK(LrAt(200.0, s) == 1e-5);
  for (int e = 11; e <= 150; ++e) CHECK(LrAt(e, s) <= LrAt(e - 1, s));
  CHECK(ScaledWarmupEpochs(150) == 10.0);
  CHECK(ScaledWarmupEpochs(20) == doctest::Approx(20.0 / 15.0));
  LrSchedule bad = s;
  bad.warmup_epochs = 150;
  CHECK_THROWS_AS(ValidateLrSchedule(bad), ConfigError);
  bad = s;
  bad.peak_lr = 0;
  CHECK_THROWS_AS(ValidateLrSchedule(bad), ConfigError);
  CHECK(DeskConfig().Schedule().warmup_epochs == doctest::Approx(20.0 / 15.0));
  CHECK(FullConfig().Schedule().warmup_epochs == 10.0);
}

TEST_CASE("sgd with momentum and selective weight decay") {
  net::Param<double> w, scale, proto;
  w.Resize(1, 1);
  w.value(0, 0) = 1.0;
  scale.Resize(1, 1);
  scale.kind = net::ParamKind::kNormScale;
  scale.value(0, 0) = 1.0;
  proto.Resize(1, 1);
  proto.kind = net::ParamKind::kPrototype;
  proto.value(0, 0) = 1.0;
  net::ParamList<double> params{{"w", &w}, {"s", &scale}, {"c", &proto}};
  core::GradientSet<double> g;
  for (const char *n : {"w", "s", "c"}) g.entries.emplace_back(n, net::Matrix<double>::Constant(1, 1, 0.5));

  Sgd<double> sgd;
  sgd.Step(params, g, 0.1);
  CHECK(w.value(0, 0) == doctest::Approx(1.0 - 0.1 * 0.50005).epsilon(1e-15));
  CHECK(scale.value(0, 0) == doctest::Approx(0.95).epsilon(1e-15));
  CHECK(proto.value(0, 0) == doctest::Approx(0.95).epsilon(1e-15));
  const double w1 = w.value(0, 0);
  const double v2 = 0.9 * 0.50005 + 0.5 + 5e-5 * w1;
  sgd.Step(params, g, 0.2);
  CHECK(w.value(0, 0) == doctest::Approx(w1 - 0.2 * v2).epsilon(1e-15));
  CHECK(scale.value(0, 0) == doctest::Approx(0.95 - 0.2 * 0.95).epsilon(1e-15));
  CHECK(sgd.buffers().size() == 3);

  core::GradientSet<double> missing;
  CHECK_THROWS_AS(sgd.Step(params, missing, 0.1), ShapeError);
  CHECK(!Decays(net::ParamKind::kNormShift));
  CHECK(Decays(net::ParamKind::kConvWeight));
}

TEST_CASE("checkpoint serialization round trip and corruption") {
  const Checkpoint c = SmallCheckpoint();
  const std::string bytes = SerializeCheckpoint(c);
  CHECK(DeserializeCheckpoint(bytes) == c);
  CHECK(SerializeCheckpoint(c) == bytes);
  CHECK(DeserializeCheckpoint(bytes).Find("b")->data[2] == 7.25f);
  CHECK(c.Find("nope") == nullptr);

  CHECK_THROWS_AS(DeserializeCheckpoint(bytes.substr(0, bytes.size() - 1)), IntegrityError);
  CHECK_THROWS_AS(DeserializeCheckpoint(bytes.substr(0, 10)), IntegrityError);
  std::string flipped = bytes;
  flipped[flipped.size() - 3] ^= 0x10;
  CHECK_THROWS_AS(DeserializeCheckpoint(flipped), IntegrityError);
  std::string magic = bytes;
  magic[0] = 'X';
  CHECK_THROWS_AS(DeserializeCheckpoint(magic), IntegrityError);
  Checkpoint newer = c;
  newer.version = kCheckpointVersion + 1;
  CHECK_THROWS_AS(DeserializeCheckpoint(SerializeCheckpoint(newer)), VersionError);
  Checkpoint bad_shape = c;
  bad_shape.tensors[0].shape = {4, 4};
  CHECK_THROWS_AS(SerializeCheckpoint(bad_shape), ShapeError);

  testing::TempDir dir("ckpt");
  SaveCheckpoint(c, dir / "c.bin");
  CHECK(LoadCheckpoint(dir / "c.bin") == c);
  CHECK(!fs::exists(dir / "c.bin.tmp"));
  CHECK_THROWS_AS(LoadCheckpoint(dir / "absent.bin"), IoError);
}

TEST_CASE("train config json") {
  const TrainConfig d = DeskConfig();
  const TrainConfig back = TrainConfigFromJson(TrainConfigToJson(d));
  CHECK(TrainConfigToJson(back) == TrainConfigToJson(d));
  CHECK_THROWS_AS(TrainConfigFromJson("{}"), ConfigError);
  CHECK_THROWS_AS(TrainConfigFromJson("not json"), ConfigError);

  const TrainConfig m = MergeTrainConfig(d, R"({"epochs": 3, "sdpn": {"mu": 0.0}})");
  CHECK(m.epochs == 3);
  CHECK(m.sdpn.mu == 0.0);
  CHECK(m.batch_size == d.batch_size);
  CHECK_THROWS_AS(MergeTrainConfig(d, R"({"epochz": 3})"), ConfigError);
  CHECK_THROWS_AS(MergeTrainConfig(d, R"({"batch_size": 1})"), ConfigError);

  CHECK_NOTHROW(RequireSameArchitecture(d, m));
  CHECK_THROWS_AS(RequireSameArchitecture(d, TinyConfig()), ConfigError);

  const TrainConfig p = FullConfig();
  CHECK(p.epochs == 150);
  CHECK(p.peak_lr == 0.4);
  CHECK(p.sdpn.temps.teacher == 0.04);
  CHECK(p.sdpn.temps.student == 0.1);
  CHECK(p.ema_m0 == 0.996);
  CHECK(p.sgd.momentum == 0.9);
  CHECK(p.sgd.weight_decay == 5e-5);
  CHECK(p.sdpn.mu == 0.1);
  CHECK_NOTHROW(ValidateTrainConfig(p));
}

TEST_CASE("metrics log") {
  MetricsRecord r{7, 1, 0.25, 0.997, 3.5, -0.125, 3.4875, 12.5};
  const MetricsRecord back = ParseMetricsRecord(FormatMetricsRecord(r));
  CHECK(back.step == 7);
  CHECK(back.lr == 0.25);
  CHECK(back.l_dr == -0.125);
  CHECK(back.total == 3.4875);
  CHECK_THROWS_AS(ParseMetricsRecord("step=x"), FormatError);

  testing::TempDir dir("log");
  MetricsLog log(dir / "m.log");
  for (int s = 1; s <= 5; ++s) {
    r.step = s;
    log.Append(r);
  }
  r.step = 5;
  CHECK_THROWS_AS(log.Append(r), ValidationError);
  CHECK(MetricsLog::Read(dir / "m.log").size() == 5);
  log.TruncateAfter(3);
  CHECK(MetricsLog::Read(dir / "m.log").size() == 3);
  r.step = 4;
  CHECK_NOTHROW(log.Append(r));
  MetricsLog reopened(dir / "m.log");
  CHECK(reopened.records().size() == 4);
}

TEST_CASE("epoch bookkeeping") {
  CHECK(StepsPerEpoch(1000, 32) == 32);
  CHECK(StepsPerEpoch(64, 32) == 2);
  CHECK(StepsPerEpoch(65, 32) == 2);
  CHECK(StepsPerEpoch(66, 32) == 3);
  CHECK_THROWS_AS(StepsPerEpoch(10, 1), ConfigError);
  CHECK(EpochCheckpointPath("/x", 3) == fs::path("/x/ckpt-epoch-003.bin"));
}

TEST_CASE("trainer: determinism, resume and checkpoint restore") {
  testing::TempDir corpus("corpus"), a("run-a"), b("run-b"), c("run-c");
  const dataio::Manifest m = TinyCorpus(corpus.path());
  const TrainConfig cfg = TinyConfig();

  double worst_row = 0;
  TrainOptions watch = Quiet();
  watch.on_step = [&](const StepInfo &info) {
    const auto &p = info.model.last_teacher_distribution();
    for (Eigen::Index i = 0; i < p.rows(); ++i)
      worst_row = std::max(worst_row, std::abs(static_cast<double>(p.row(i).sum()) - 1.0));
  };
  Trainer ta(m, cfg, a.path());
  const TrainResult ra = ta.Run(watch);
  CHECK(ra.steps == 2 * StepsPerEpoch(9, 4));
  CHECK(ra.log.size() == static_cast<size_t>(ra.steps));
  CHECK(worst_row < 1e-6);
  CHECK(ra.checkpoint.epoch == 2);
  CHECK(fs::exists(a / "ckpt-epoch-001.bin"));
  CHECK(fs::exists(a / "ckpt-epoch-002.bin"));
  CHECK(fs::exists(a / "config.json"));
  CHECK(ra.local_augment.spec_augment > 0);

  // Same seed, fresh process state: bit-identical checkpoint files.
  Trainer tb(m, cfg, b.path());
  tb.Run(Quiet());
  CHECK(testing::ReadBytes(a / "ckpt-epoch-002.bin") ==
        testing::ReadBytes(b / "ckpt-epoch-002.bin"));

  // Interrupted after one epoch, then resumed from the epoch-1 checkpoint.
  {
    Trainer tc(m, cfg, c.path());
    TrainOptions stop = Quiet();
    stop.stop_after_epoch = 1;
    CHECK(tc.Run(stop).checkpoint.epoch == 1);
    CHECK(!fs::exists(c / "ckpt-epoch-002.bin"));
  }
  Trainer resumed(m, cfg, c.path());
  resumed.Resume(LoadCheckpoint(c / "ckpt-epoch-001.bin"));
  const TrainResult rc = resumed.Run(Quiet());
  CHECK(rc.checkpoint == ra.checkpoint);
  CHECK(testing::ReadBytes(a / "ckpt-epoch-002.bin") ==
        testing::ReadBytes(c / "ckpt-epoch-002.bin"));
  CHECK(MetricsLog::Read(c / "metrics.log").size() == ra.log.size());

  Trainer wrong(m, TrainConfigFromJson(TrainConfigToJson(DeskConfig())), b.path());
  CHECK_THROWS_AS(wrong.Resume(ra.checkpoint), ConfigError);

  // A different seed gives a different model.
  TrainConfig other = cfg;
  other.seed = 2;
  testing::TempDir d("run-d");
  Trainer td(m, other, d.path());
  TrainOptions one = Quiet();
  one.stop_after_epoch = 1;
  CHECK(!(td.Run(one).checkpoint == LoadCheckpoint(a / "ckpt-epoch-001.bin")));

  // Restoring a checkpoint reproduces the trained weights and buffers.
  Model restored = ModelFromCheckpoint(ra.checkpoint);
  const auto pa = ta.model().teacher.Params(), pr = restored.teacher.Params();
  REQUIRE(pa.size() == pr.size());
  for (size_t i = 0; i < pa.size(); ++i) CHECK(pa[i].second->value == pr[i].second->value);
  CHECK(restored.prototypes.value == ta.model().prototypes.value);
  const auto ba = ta.model().teacher.Buffers(), br = restored.teacher.Buffers();
  for (size_t i = 0; i < ba.size(); ++i) CHECK(*ba[i].second == *br[i].second);
  Checkpoint broken = ra.checkpoint;
  std::erase_if(broken.tensors, [](const NamedTensor &t) { return t.name == "prototypes"; });
  CHECK_THROWS_AS(ModelFromCheckpoint(broken), IntegrityError);
}

TEST_CASE("trainer rejects unusable inputs") {
  testing::TempDir corpus("corpus1"), out("out1");
  dataio::Manifest m = TinyCorpus(corpus.path());
  m.entries.resize(1);
  CHECK_THROWS_AS(Trainer(m, TinyConfig(), out.path()), ValidationError);
}
