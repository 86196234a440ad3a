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

#include "sdpn/core/self_check.h"

#include <vector>

#include "sdpn/pipeline/multicrop.h"
#include "sdpn/random.h"

namespace sdpn::core {

net::GradCheckResult RunTinyGradCheck(const TinyCheckConfig &c) {
  net::NetworkConfig nc;
  nc.encoder.input_dim = c.n_mels;
  nc.encoder.channels = {c.channels, c.channels, c.channels};
  nc.encoder.embed_dim = c.embed_dim;
  nc.head = {c.hidden, c.hidden, c.out_dim};
  SdpnConfig sc;
  sc.n_prototypes = c.n_prototypes;
  sc.mu = c.mu;
  SdpnModel<double> model(nc, sc, c.seed);

  Rng rng(StreamSeed(c.seed, {1}));
  auto random_features = [&](int frames) {
    pipeline::FeatureMatrix m(frames, c.n_mels);
    for (Eigen::Index i = 0; i < m.size(); ++i)
      m.data()[i] = static_cast<float>(Gaussian(rng));
    return m;
  };
  std::vector<pipeline::FeatureMatrix> globals, locals;
  for (int b = 0; b < c.batch; ++b) {
    globals.push_back(random_features(c.global_frames));
    for (int v = 0; v < pipeline::kNumLocalViews; ++v)
      locals.push_back(random_features(c.local_frames));
  }
  std::vector<const pipeline::FeatureMatrix *> gp, lp;
  for (const auto &g : globals) gp.push_back(&g);
  for (const auto &l : locals) lp.push_back(&l);
  const auto global_batch = net::StackFeatures<double>(gp);
  const auto local_batch = net::StackFeatures<double>(lp);

  const Matrix<double> p_tea = model.TeacherTargets(global_batch);
  model.StudentLoss(local_batch, p_tea, pipeline::kNumLocalViews);
  model.Backward();
  auto loss = [&] {
    return model.StudentLoss(local_batch, p_tea, pipeline::kNumLocalViews).total;
  };
  net::GradCheckOptions probe;
  probe.eps = c.eps;
  probe.abs_floor = c.abs_floor;
  probe.n_probe = c.n_probe;
  probe.seed = c.seed;
  probe.regime = [&] { return model.RegimeSignature(); };
  return net::GradCheck(model.TrainableParams(), loss, probe);
}

}  // namespace sdpn::core
