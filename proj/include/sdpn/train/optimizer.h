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

#ifndef SDPN_TRAIN_OPTIMIZER_H_
#define SDPN_TRAIN_OPTIMIZER_H_

#include <map>
#include <string>

#include "sdpn/core/sdpn.h"

namespace sdpn::train {

struct SgdConfig {
  double momentum = 0.9;
  double weight_decay = 5e-5;
};

/// True for parameter kinds that get weight decay (everything except
/// batch-norm affine terms and prototypes).
bool Decays(net::ParamKind kind);

/// SGD with heavy-ball momentum and coupled weight decay:
///   g = grad + wd * p;  v = momentum * v + g;  p -= lr * v.
template <typename T>
class Sgd {
 public:
  explicit Sgd(const SgdConfig &config = {}) : config_(config) {}

  /// Gradients are matched to parameters by name.
  void Step(const net::ParamList<T> &params, const core::GradientSet<T> &grads,
            double lr);

  std::map<std::string, net::Matrix<T>> &buffers() { return velocity_; }
  const std::map<std::string, net::Matrix<T>> &buffers() const { return velocity_; }
  const SgdConfig &config() const { return config_; }

 private:
  SgdConfig config_;
  std::map<std::string, net::Matrix<T>> velocity_;
};

}  // namespace sdpn::train

#endif  // SDPN_TRAIN_OPTIMIZER_H_
