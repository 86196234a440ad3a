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
#include <numbers>

#include "doctest.h"
#include "oracles.h"
#include "sdpn/core/sdpn.h"
#include "sdpn/core/self_check.h"
#include "sdpn/error.h"
#include "sdpn/random.h"

using namespace sdpn;
using namespace sdpn::core;
using Md = Matrix<double>;

namespace {

Md RandomMatrix(int r, int c, Rng &rng, double scale = 1.0) {
  Md m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = scale * Gaussian(rng);
  return m;
}

testing::Grid ToGrid(const Md &m) {
  testing::Grid g(m.rows(), std::vector<double>(m.cols()));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) g[i][j] = m(i, j);
  return g;
}

double MaxDiff(const Md &a, const testing::Grid &b) {
  double worst = 0;
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      worst = std::max(worst, std::abs(a(i, j) - b[i][j]));
  return worst;
}

net::NetworkConfig TinyNet() {
  net::NetworkConfig c;
  c.encoder.input_dim = 8;
  c.encoder.channels = {8, 8, 8};
  c.head = {16, 16, 8};
  return c;
}

net::SeqBatch<double> RandomBatch(int n, int frames, Rng &rng) {
  net::SeqBatch<double> b;
  b.data = RandomMatrix(n * frames, 8, rng);
  b.lengths.assign(n, frames);
  return b;
}

}  // namespace

TEST_CASE("config validation and total loss") {
  SdpnConfig c;
  CHECK_NOTHROW(ValidateSdpnConfig(c));
  SdpnConfig bad = c;
  bad.temps.teacher = 0.2;
  CHECK_THROWS_AS(ValidateSdpnConfig(bad), ConfigError);
  bad = c;
  bad.sinkhorn.n_iters = 0;
  CHECK_THROWS_AS(ValidateSdpnConfig(bad), ConfigError);
  bad = c;
  bad.mu = -0.1;
  CHECK_THROWS_AS(ValidateSdpnConfig(bad), ConfigError);

  const LossBreakdown l = TotalLoss(2.0, -0.5, 0.1);
  CHECK(l.total == 2.0 + 0.1 * -0.5);
  CHECK_THROWS_AS(TotalLoss(std::nan(""), 0, 0.1), NumericError);
}

TEST_CASE("sinkhorn: symmetric cases") {
  SinkhornConfig sk;
  const Md u = SinkhornKnopp(Md::Constant(4, 4, 2.5), sk);
  CHECK((u.array() - 0.25).abs().maxCoeff() < 1e-15);
  const Md h = SinkhornKnopp(Md::Constant(2, 2, -7.0), sk);
  CHECK((h.array() - 0.5).abs().maxCoeff() < 1e-15);
  Md bad = Md::Zero(2, 2);
  bad(0, 1) = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(SinkhornKnopp(bad, sk), NumericError);
}

TEST_CASE("sinkhorn: matches a scripted iteration") {
  SinkhornConfig sk;
  Md z(2, 3);
  z << 1, 0, 0, 0, 1, 0;
  // tau_t = 1: projections are the logits against identity prototypes.
  const Md p = TeacherDistribution<double>(z, Md::Identity(3, 3), 1.0, sk);
  CHECK(MaxDiff(p, testing::ScriptedSinkhorn(ToGrid(z), 3)) < 1e-10);

  Rng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const int b = 1 + static_cast<int>(rng() % 8), k = 1 + static_cast<int>(rng() % 8);
    const Md logits = RandomMatrix(b, k, rng, 5.0);
    const Md q = SinkhornKnopp(logits, sk);
    CHECK(MaxDiff(q, testing::ScriptedSinkhorn(ToGrid(logits), 3)) < 1e-10);
    for (int i = 0; i < b; ++i) CHECK(std::abs(q.row(i).sum() - 1.0) < 1e-12);
  }
  // Columns approach B/K as iterations grow.
  SinkhornConfig many;
  many.n_iters = 200;
  const Md q = SinkhornKnopp(RandomMatrix(6, 4, rng), many);
  for (int j = 0; j < 4; ++j) CHECK(q.col(j).sum() == doctest::Approx(1.5).epsilon(1e-9));
}

TEST_CASE("softmax and student distribution") {
  Md z(1, 2);
  z << std::log(3.0), 0.0;
  const Md p = Softmax<double>(z);
  CHECK(p(0, 0) == doctest::Approx(0.75).epsilon(1e-15));
  CHECK(p(0, 1) == doctest::Approx(0.25).epsilon(1e-15));
  Rng rng(12);
  const Md s = StudentDistribution<double>(RandomMatrix(5, 3, rng), RandomMatrix(7, 3, rng), 0.1);
  for (int i = 0; i < 5; ++i) CHECK(std::abs(s.row(i).sum() - 1.0) < 1e-12);
  const Md big = Softmax<double>(Md::Constant(1, 3, 1e4));
  CHECK((big.array() - 1.0 / 3).abs().maxCoeff() < 1e-15);
  CHECK_THROWS_AS(StudentDistribution<double>(Md::Zero(2, 3), Md::Zero(2, 4), 0.1), ShapeError);
}

TEST_CASE("cross entropy: closed forms, alignment and gradient") {
  Md a(1, 4), b = Md::Constant(1, 4, 0.25);
  a << 1, 0, 0, 0;
  CHECK(std::abs(CrossEntropyLoss<double>(a, b, 1) - std::log(4.0)) < 1e-12);
  CHECK(CrossEntropyLoss<double>(a, a, 1) == 0.0);
  const Md uniform = Md::Constant(2, 5, 0.2);
  Md stu = Md::Constant(8, 5, 0.2);
  CHECK(std::abs(CrossEntropyLoss<double>(uniform, stu, 4) - std::log(5.0)) < 1e-12);
  CHECK_THROWS_AS(CrossEntropyLoss<double>(uniform, stu, 3), ValidationError);
  // One zero student entry under teacher mass hits the log floor.
  Md zero = Md::Zero(1, 2);
  zero(0, 1) = 1.0;
  Md one_hot = Md::Zero(1, 2);
  one_hot(0, 0) = 1.0;
  CHECK(CrossEntropyLoss<double>(one_hot, zero, 1) == doctest::Approx(-std::log(1e-12)));

  Rng rng(13);
  const Md tea = SinkhornKnopp(RandomMatrix(3, 6, rng), {});
  Md logits = RandomMatrix(6, 6, rng);
  Md d;
  CrossEntropyLoss<double>(tea, Softmax<double>(logits), 2, &d);
  for (Eigen::Index i = 0; i < logits.size(); ++i) {
    const double s = logits.data()[i];
    logits.data()[i] = s + 1e-6;
    const double up = CrossEntropyLoss<double>(tea, Softmax<double>(logits), 2);
    logits.data()[i] = s - 1e-6;
    const double down = CrossEntropyLoss<double>(tea, Softmax<double>(logits), 2);
    logits.data()[i] = s;
    CHECK(d.data()[i] == doctest::Approx((up - down) / 2e-6).epsilon(1e-6));
  }
}

TEST_CASE("diversity loss: closed forms and gradient") {
  Md anti(2, 3);
  anti << 1, 0, 0, -1, 0, 0;
  CHECK(std::abs(DiversityLoss<double>(anti, 1e-4) + std::log(2.0)) < 1e-12);
  const Md ortho = Md::Identity(3, 3);
  CHECK(std::abs(DiversityLoss<double>(ortho, 1e-4) + std::log(std::sqrt(2.0))) < 1e-12);
  Md same(2, 2);
  same << 0.6, 0.8, 0.6, 0.8;
  std::vector<Eigen::Index> nearest;
  Md g;
  CHECK(std::abs(DiversityLoss<double>(same, 1e-4, false, &g, &nearest) + std::log(1e-4)) <
        1e-12);
  CHECK(nearest == std::vector<Eigen::Index>{-1, -1});
  CHECK(g.cwiseAbs().maxCoeff() == 0.0);
  // Scale invariance: inputs are normalized internally.
  CHECK(DiversityLoss<double>(3.0 * ortho, 1e-4) == doctest::Approx(-std::log(std::sqrt(2.0))));
  CHECK(DiversityLoss<double>(ortho, 1e-4, true) ==
        doctest::Approx(-3 * std::log(std::sqrt(2.0))));
  CHECK_THROWS_AS(DiversityLoss<double>(Md::Ones(1, 3), 1e-4), ValidationError);

  Rng rng(14);
  Md x = RandomMatrix(5, 4, rng);
  DiversityLoss<double>(x, 1e-4, false, &g, &nearest);
  CHECK(nearest.size() == 5);
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double s = x.data()[i];
    x.data()[i] = s + 1e-7;
    const double up = DiversityLoss<double>(x, 1e-4);
    x.data()[i] = s - 1e-7;
    const double down = DiversityLoss<double>(x, 1e-4);
    x.data()[i] = s;
    CHECK(g.data()[i] == doctest::Approx((up - down) / 2e-7).epsilon(1e-5));
  }
  CHECK(MeanNearestNeighbourDistance(ortho) == doctest::Approx(std::sqrt(2.0)));
}

TEST_CASE("ema momentum schedule and update") {
  CHECK(EmaMomentum(0, 100, 0.996) == doctest::Approx(0.996));
  CHECK(EmaMomentum(50, 100, 0.996) == doctest::Approx(0.998));
  CHECK(EmaMomentum(100, 100, 0.996) == 1.0);
  for (long s = 1; s <= 100; ++s) CHECK(EmaMomentum(s, 100, 0.996) >= EmaMomentum(s - 1, 100, 0.996));

  net::Network<double> s(TinyNet(), 1), t(TinyNet(), 2);
  const auto before = t.Params()[0].second->value;
  const auto stud = s.Params()[0].second->value;
  s.Buffers()[0].second->setConstant(3.0);
  EmaUpdate(&t, s, 0.9);
  CHECK((t.Params()[0].second->value - (0.9 * before + 0.1 * stud)).cwiseAbs().maxCoeff() <
        1e-15);
  CHECK((t.Buffers()[0].second->array() == 3.0).all());
  EmaUpdate(&t, s, 0.0);
  CHECK(t.Params()[0].second->value == stud);
  CHECK_THROWS_AS(EmaUpdate(&t, s, 1.5), ConfigError);
}

TEST_CASE("model: prototypes, teacher targets and gradient names") {
  SdpnConfig c;
  c.n_prototypes = 16;
  SdpnModel<double> model(TinyNet(), c, 3);
  CHECK(model.num_prototypes() == 16);
  for (int i = 0; i < 16; ++i) CHECK(model.prototypes.value.row(i).norm() == doctest::Approx(1.0));
  CHECK(model.teacher.Params()[0].second->value == model.student.Params()[0].second->value);

  Rng rng(15);
  const Md p_tea = model.TeacherTargets(RandomBatch(4, 40, rng));
  REQUIRE(p_tea.rows() == 4);
  REQUIRE(p_tea.cols() == 16);
  for (int i = 0; i < 4; ++i) CHECK(std::abs(p_tea.row(i).sum() - 1.0) < 1e-9);

  CHECK_THROWS_AS(model.Backward(), StateError);
  CHECK_THROWS_AS(model.StudentLoss(RandomBatch(12, 24, rng), p_tea, 4), ValidationError);
  const LossBreakdown l = model.StudentLoss(RandomBatch(16, 24, rng), p_tea, 4);
  CHECK(l.total == l.l_ce + 0.1 * l.l_dr);
  const auto grads = model.Backward();
  CHECK(grads.Find("prototypes") != nullptr);
  CHECK(grads.Find("student.head.fc3.weight") != nullptr);
  CHECK(grads.Find("teacher.head.fc3.weight") == nullptr);
  CHECK_THROWS_AS(model.Backward(), StateError);

  model.prototypes.value *= 3.0;
  model.NormalizePrototypes();
  CHECK(model.prototypes.value.row(5).norm() == doctest::Approx(1.0));

  SdpnConfig plain = c;
  plain.use_prototypes = false;
  SdpnModel<double> no_proto(TinyNet(), plain, 3);
  CHECK(no_proto.num_prototypes() == 8);
  CHECK(no_proto.prototypes.value == Md::Identity(8, 8));
  CHECK(no_proto.TrainableParams().size() + 1 == model.TrainableParams().size());
}

TEST_CASE("full-loss gradient check on the tiny model") {
  TinyCheckConfig tc;
  tc.n_probe = 400;
  const auto r = RunTinyGradCheck(tc);
  CHECK(r.n_probed == 400);
  CHECK(r.max_rel_error < 1e-4);
  CHECK(r.n_skipped <= 4);
}
