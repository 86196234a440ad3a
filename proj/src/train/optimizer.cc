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

#include "sdpn/train/optimizer.h"

#include "sdpn/error.h"

namespace sdpn::train {

bool Decays(net::ParamKind kind) {
  return kind != net::ParamKind::kNormScale && kind != net::ParamKind::kNormShift &&
         kind != net::ParamKind::kPrototype;
}

template <typename T>
void Sgd<T>::Step(const net::ParamList<T> &params, const core::GradientSet<T> &grads,
                  double lr) {
  const T momentum = static_cast<T>(config_.momentum);
  const T lr_t = static_cast<T>(lr);
  for (const auto &[name, p] : params) {
    const net::Matrix<T> *g = grads.Find(name);
    if (!g) throw ShapeError("no gradient for parameter " + name);
    if (g->rows() != p->value.rows() || g->cols() != p->value.cols())
      throw ShapeError("gradient shape mismatch for " + name);
    net::Matrix<T> step = *g;
    if (Decays(p->kind) && config_.weight_decay != 0.0)
      step += static_cast<T>(config_.weight_decay) * p->value;
    auto it = velocity_.find(name);
    if (it == velocity_.end())
      it = velocity_.emplace(name, net::Matrix<T>::Zero(g->rows(), g->cols())).first;
    if (it->second.rows() != g->rows() || it->second.cols() != g->cols())
      throw ShapeError("momentum buffer shape mismatch for " + name);
    it->second = momentum * it->second + step;
    p->value -= lr_t * it->second;
  }
}

template class Sgd<float>;
template class Sgd<double>;

}  // namespace sdpn::train
