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
#include <functional>
#include <set>

#include "doctest.h"
#include "sdpn/error.h"
#include "sdpn/net/grad_check.h"
#include "sdpn/net/layers.h"
#include "sdpn/net/network.h"

using namespace sdpn;
using namespace sdpn::net;
using Md = Matrix<double>;

namespace {

Md RandomMatrix(int r, int c, Rng &rng) {
  Md m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = Gaussian(rng);
  return m;
}

// Central-difference derivative of f with respect to every entry of *x.
Md Numeric(Md *x, const std::function<double()> &f, double eps = 1e-6) {
  Md g(x->rows(), x->cols());
  for (Eigen::Index i = 0; i < x->size(); ++i) {
    const double s = x->data()[i];
    x->data()[i] = s + eps;
    const double up = f();
    x->data()[i] = s - eps;
    const double down = f();
    x->data()[i] = s;
    g.data()[i] = (up - down) / (2 * eps);
  }
  return g;
}

double MaxRel(const Md &a, const Md &b) {
  double worst = 0;
  for (Eigen::Index i = 0; i < a.size(); ++i)
    worst = std::max(worst, RelativeError(a.data()[i], b.data()[i], 1e-7));
  return worst;
}

}  // namespace

TEST_CASE("linear: forward and gradients") {
  Rng rng(1);
  Linear<double> lin(3, 2, true);
  lin.Init(rng);
  lin.bias.value << 0.5, -1.0;
  Md x = RandomMatrix(4, 3, rng);
  const Md y = lin.Forward(x, Mode::kEval);
  const Md ref = (x * lin.weight.value).rowwise() + lin.bias.value.row(0);
  CHECK((y - ref).cwiseAbs().maxCoeff() < 1e-12);

  const Md r = RandomMatrix(4, 2, rng);
  auto loss = [&] { return (lin.Forward(x, Mode::kEval).array() * r.array()).sum(); };
  lin.weight.ZeroGrad();
  lin.bias.ZeroGrad();
  lin.Forward(x, Mode::kTrain);
  const Md dx = lin.Backward(r);
  CHECK(MaxRel(dx, Numeric(&x, loss)) < 1e-6);
  CHECK(MaxRel(lin.weight.grad, Numeric(&lin.weight.value, loss)) < 1e-6);
  CHECK(MaxRel(lin.bias.grad, Numeric(&lin.bias.value, loss)) < 1e-6);
  CHECK_THROWS_AS(lin.Backward(r), StateError);
  CHECK_THROWS_AS(lin.Forward(RandomMatrix(2, 5, rng), Mode::kEval), ShapeError);
}

TEST_CASE("conv1d: valid length, dilation and gradients") {
  Rng rng(2);
  Conv1d<double> conv(3, 4, 3, 2);
  conv.Init(rng);
  CHECK(conv.context() == 4);
  SeqBatch<double> x;
  x.data = RandomMatrix(10 + 7, 3, rng);
  x.lengths = {10, 7};
  const auto y = conv.Forward(x, Mode::kEval);
  CHECK(y.lengths == std::vector<int>{6, 3});
  CHECK(y.data.rows() == 9);
  // Frame t of sequence 1 sees input frames t, t+2, t+4 of that sequence.
  for (int o = 0; o < 4; ++o) {
    double ref = conv.bias.value(0, o);
    for (int k = 0; k < 3; ++k)
      for (int c = 0; c < 3; ++c) ref += conv.weight.value(k * 3 + c, o) * x.data(10 + 1 + 2 * k, c);
    CHECK(y.data(6 + 1, o) == doctest::Approx(ref).epsilon(1e-12));
  }

  const Md r = RandomMatrix(9, 4, rng);
  auto loss = [&] { return (conv.Forward(x, Mode::kEval).data.array() * r.array()).sum(); };
  conv.weight.ZeroGrad();
  conv.bias.ZeroGrad();
  conv.Forward(x, Mode::kTrain);
  SeqBatch<double> dy{r, y.lengths};
  const auto dx = conv.Backward(dy);
  CHECK(MaxRel(dx.data, Numeric(&x.data, loss)) < 1e-6);
  CHECK(MaxRel(conv.weight.grad, Numeric(&conv.weight.value, loss)) < 1e-6);
  CHECK(MaxRel(conv.bias.grad, Numeric(&conv.bias.value, loss)) < 1e-6);

  SeqBatch<double> too_short{RandomMatrix(4, 3, rng), {4}};
  CHECK_THROWS_AS(conv.Forward(too_short, Mode::kEval), ShapeError);
}

TEST_CASE("batch norm: train statistics, running stats, eval determinism") {
  Rng rng(3);
  BatchNorm<double> bn(3);
  bn.scale.value << 1.0, 2.0, 0.5;
  bn.shift.value << 0.0, 1.0, -1.0;
  Md x = RandomMatrix(6, 3, rng) * 3.0;
  const Md y = bn.Forward(x, Mode::kTrain);
  for (int c = 0; c < 3; ++c) {
    const double mean = x.col(c).mean();
    const double var = (x.col(c).array() - mean).square().mean();
    for (int i = 0; i < 6; ++i) {
      const double ref = bn.scale.value(0, c) * (x(i, c) - mean) / std::sqrt(var + 1e-5) +
                         bn.shift.value(0, c);
      CHECK(y(i, c) == doctest::Approx(ref).epsilon(1e-12));
    }
    CHECK(bn.running_mean(0, c) == doctest::Approx(0.1 * mean));
    CHECK(bn.running_var(0, c) == doctest::Approx(0.9 + 0.1 * var * 6.0 / 5.0));
  }
  const Md e1 = bn.Forward(x, Mode::kEval), e2 = bn.Forward(x, Mode::kEval);
  CHECK(e1 == e2);

  const Md r = RandomMatrix(6, 3, rng);
  BatchNorm<double> fresh(3);
  fresh.scale.value = bn.scale.value;
  fresh.shift.value = bn.shift.value;
  auto loss = [&] { return (fresh.Forward(x, Mode::kTrain).array() * r.array()).sum(); };
  fresh.scale.ZeroGrad();
  fresh.shift.ZeroGrad();
  fresh.Forward(x, Mode::kTrain);
  const Md dx = fresh.Backward(r);
  CHECK(MaxRel(dx, Numeric(&x, loss)) < 1e-5);
  CHECK(MaxRel(fresh.scale.grad, Numeric(&fresh.scale.value, loss)) < 1e-6);
  CHECK(MaxRel(fresh.shift.grad, Numeric(&fresh.shift.value, loss)) < 1e-6);
}

TEST_CASE("activations, pooling and normalization gradients") {
  Rng rng(4);
  {
    Gelu<double> g;
    Md x = RandomMatrix(5, 4, rng);
    CHECK(g.Forward(Md::Zero(1, 1), Mode::kEval)(0, 0) == 0.0);
    CHECK(g.Forward(Md::Constant(1, 1, 1.0), Mode::kEval)(0, 0) ==
          doctest::Approx(0.5 * (1 + std::erf(1 / std::sqrt(2.0)))));
    const Md r = RandomMatrix(5, 4, rng);
    auto loss = [&] { return (g.Forward(x, Mode::kEval).array() * r.array()).sum(); };
    g.Forward(x, Mode::kTrain);
    const Md dx = g.Backward(r);
    CHECK(MaxRel(dx, Numeric(&x, loss)) < 1e-6);
  }
  {
    Relu<double> relu;
    Md x(1, 4);
    x << -1.0, 0.0, 2.0, -0.5;
    const Md y = relu.Forward(x, Mode::kTrain);
    CHECK(y == (Md(1, 4) << 0.0, 0.0, 2.0, 0.0).finished());
    const Md dx = relu.Backward(Md::Ones(1, 4));
    CHECK(dx == (Md(1, 4) << 0.0, 0.0, 1.0, 0.0).finished());
  }
  {
    StatsPool<double> pool;
    SeqBatch<double> x{RandomMatrix(9, 3, rng), {5, 4}};
    const Md y = pool.Forward(x, Mode::kEval);
    REQUIRE(y.rows() == 2);
    REQUIRE(y.cols() == 6);
    const auto seq1 = x.data.middleRows(5, 4);
    const double mean = seq1.col(2).mean();
    const double var = (seq1.col(2).array() - mean).square().mean();
    CHECK(y(1, 2) == doctest::Approx(mean));
    CHECK(y(1, 5) == doctest::Approx(std::sqrt(var + 1e-8)));
    const Md r = RandomMatrix(2, 6, rng);
    auto loss = [&] { return (pool.Forward(x, Mode::kEval).array() * r.array()).sum(); };
    pool.Forward(x, Mode::kTrain);
    const Md dx = pool.Backward(r).data;
    CHECK(MaxRel(dx, Numeric(&x.data, loss)) < 1e-6);
  }
  {
    L2Normalize<double> norm;
    Md x = RandomMatrix(3, 5, rng);
    const Md y = norm.Forward(x, Mode::kEval);
    for (int i = 0; i < 3; ++i) CHECK(y.row(i).norm() == doctest::Approx(1.0));
    CHECK(norm.Forward(Md::Zero(1, 3), Mode::kEval).allFinite());
    const Md r = RandomMatrix(3, 5, rng);
    auto loss = [&] { return (norm.Forward(x, Mode::kEval).array() * r.array()).sum(); };
    norm.Forward(x, Mode::kTrain);
    const Md dx = norm.Backward(r);
    CHECK(MaxRel(dx, Numeric(&x, loss)) < 1e-6);
  }
}

TEST_CASE("encoder and network: shapes, names, determinism") {
  NetworkConfig c;
  c.encoder.input_dim = 8;
  c.encoder.channels = {8, 8, 8};
  c.head = {16, 16, 8};
  Network<float> net(c, 5);
  CHECK(net.encoder.MinFrames() == 15);

  Rng rng(6);
  pipeline::FeatureMatrix a(40, 8), b(25, 8);
  for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = static_cast<float>(Gaussian(rng));
  for (Eigen::Index i = 0; i < b.size(); ++i) b.data()[i] = static_cast<float>(Gaussian(rng));
  std::vector<const pipeline::FeatureMatrix *> feats{&a, &b};
  const auto batch = StackFeatures<float>(feats);
  CHECK(batch.lengths == std::vector<int>{40, 25});
  const Matrix<float> e1 = net.Embed(batch, Mode::kEval);
  const Matrix<float> e2 = net.Embed(batch, Mode::kEval);
  CHECK(e1.rows() == 2);
  CHECK(e1.cols() == 512);
  CHECK(e1 == e2);
  const Matrix<float> z = net.Project(e1, Mode::kTrain);
  CHECK(z.cols() == 8);
  for (int i = 0; i < 2; ++i) CHECK(z.row(i).norm() == doctest::Approx(1.0f).epsilon(1e-5));

  std::set<std::string> names;
  for (const auto &[n, p] : net.Params()) names.insert(n);
  for (const char *n : {"encoder.tdnn0.conv.weight", "encoder.tdnn2.bn.scale",
                        "encoder.proj.weight", "head.fc1.weight", "head.bn2.shift",
                        "head.fc3.bias"})
    CHECK(names.count(n) == 1);
  CHECK(names.count("head.fc1.bias") == 0);
  CHECK(net.Buffers().size() == 2 * 5);

  Network<double> copy(c, 99);
  CopyNetwork(net, &copy);
  const auto pd = copy.Params();
  const auto pf = net.Params();
  REQUIRE(pd.size() == pf.size());
  for (size_t i = 0; i < pd.size(); ++i)
    CHECK((pd[i].second->value.cast<float>().array() == pf[i].second->value.array()).all());

  pipeline::FeatureMatrix tiny(10, 8);
  tiny.setZero();
  CHECK_THROWS_AS(net.Embed(StackFeatures<float>(tiny), Mode::kEval), ShapeError);
  NetworkConfig bad = c;
  bad.encoder.kernels = {5, 3};
  CHECK_THROWS_AS(ValidateNetworkConfig(bad), ConfigError);
}

TEST_CASE("same seed gives identical initial weights") {
  NetworkConfig c;
  c.encoder.input_dim = 8;
  c.encoder.channels = {8, 8, 8};
  c.head = {16, 16, 8};
  Network<float> a(c, 9), b(c, 9), other(c, 10);
  const auto pa = a.Params(), pb = b.Params(), po = other.Params();
  bool any_diff = false;
  for (size_t i = 0; i < pa.size(); ++i) {
    CHECK(pa[i].second->value == pb[i].second->value);
    any_diff = any_diff || pa[i].second->value != po[i].second->value;
  }
  CHECK(any_diff);
}

TEST_CASE("grad check utility") {
  CHECK(RelativeError(1.0, 1.0) == 0.0);
  CHECK(RelativeError(1.0, 0.5) == doctest::Approx(0.5));
  CHECK(RelativeError(0.0, 1e-10) == doctest::Approx(1e-2));
  CHECK(RelativeError(0.0, 1e-10, 1e-6) == doctest::Approx(1e-4));

  // f(p) = sum p^3 with analytic gradient 3 p^2.
  Param<double> p;
  p.Resize(2, 3);
  p.value << 1, -2, 0.5, 3, 0.1, -1;
  p.grad = 3.0 * p.value.array().square().matrix();
  ParamList<double> params{{"p", &p}};
  auto loss = [&] { return p.value.array().cube().sum(); };
  GradCheckResult r = GradCheck(params, loss);
  CHECK(r.max_rel_error < 1e-8);
  CHECK(r.n_probed == 6);
  p.grad(1, 1) += 0.5;
  r = GradCheck(params, loss);
  CHECK(r.worst_index == 4);
  CHECK(r.max_rel_error > 0.1);
  GradCheckOptions sub;
  sub.n_probe = 2;
  CHECK(GradCheck(params, loss, sub).n_probed == 2);
}
