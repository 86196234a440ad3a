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

#ifndef SDPN_NET_TYPES_H_
#define SDPN_NET_TYPES_H_

#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

namespace sdpn::net {

template <typename T>
using Matrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using RowVector = Eigen::Matrix<T, 1, Eigen::Dynamic>;

enum class Mode { kTrain, kEval };

enum class ParamKind {
  kConvWeight,
  kLinearWeight,
  kBias,
  kNormScale,
  kNormShift,
  kPrototype,
};

const char *ParamKindName(ParamKind kind);

/// A learnable tensor and its accumulated gradient.
template <typename T>
struct Param {
  Matrix<T> value;
  Matrix<T> grad;
  ParamKind kind = ParamKind::kLinearWeight;

  void Resize(Eigen::Index rows, Eigen::Index cols) {
    value.setZero(rows, cols);
    grad.setZero(rows, cols);
  }
  void ZeroGrad() { grad.setZero(value.rows(), value.cols()); }
};

template <typename T>
using ParamList = std::vector<std::pair<std::string, Param<T> *>>;

/// Non-learnable state (batch-norm running statistics).
template <typename T>
using BufferList = std::vector<std::pair<std::string, Matrix<T> *>>;

/// Variable-length sequences stacked along rows: rows [offset_i,
/// offset_i + lengths[i]) belong to sequence i.
template <typename T>
struct SeqBatch {
  Matrix<T> data;
  std::vector<int> lengths;

  int num_sequences() const { return static_cast<int>(lengths.size()); }
};

}  // namespace sdpn::net

#endif  // SDPN_NET_TYPES_H_
