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

#ifndef SDPN_NET_LAYERS_H_
#define SDPN_NET_LAYERS_H_

#include <string>
#include <vector>

#include "sdpn/net/types.h"
#include "sdpn/random.h"

namespace sdpn::net {

// Every layer caches what its backward pass needs when run in kTrain mode.
// Backward() consumes the cache; a second Backward() without a new forward
// throws StateError. Parameter gradients accumulate into Param::grad.

/// y = x W + b with W stored in x out.
template <typename T>
class Linear {
 public:
  Linear() = default;
  Linear(int in_dim, int out_dim, bool with_bias);

  void Init(Rng &rng);
  Matrix<T> Forward(const Matrix<T> &x, Mode mode);
  Matrix<T> Backward(const Matrix<T> &dy, bool need_input_grad = true);
  void Collect(const std::string &prefix, ParamList<T> *params);

  int in_dim() const { return static_cast<int>(weight.value.rows()); }
  int out_dim() const { return static_cast<int>(weight.value.cols()); }
  bool has_bias() const { return with_bias_; }

  Param<T> weight, bias;

 private:
  bool with_bias_ = true;
  Matrix<T> x_;
  bool cached_ = false;
};

/// Dilated 1-D convolution over time without padding (TDNN layer). Each
/// sequence of length L produces L - (kernel - 1) * dilation frames. The
/// weight is stored im2col-style: (kernel * in) x out, tap-major.
template <typename T>
class Conv1d {
 public:
  Conv1d() = default;
  Conv1d(int in_dim, int out_dim, int kernel, int dilation);

  void Init(Rng &rng);
  SeqBatch<T> Forward(const SeqBatch<T> &x, Mode mode);
  SeqBatch<T> Backward(const SeqBatch<T> &dy, bool need_input_grad = true);
  void Collect(const std::string &prefix, ParamList<T> *params);

  int context() const { return (kernel_ - 1) * dilation_; }
  int in_dim() const { return in_; }
  int out_dim() const { return out_; }

  Param<T> weight, bias;

 private:
  Matrix<T> Im2Col(const SeqBatch<T> &x) const;

  int in_ = 0, out_ = 0, kernel_ = 1, dilation_ = 1;
  Matrix<T> cols_;
  std::vector<int> in_lengths_;
  bool cached_ = false;
};

/// Normalizes each column over the rows of the batch.
template <typename T>
class BatchNorm {
 public:
  BatchNorm() = default;
  explicit BatchNorm(int dim, T eps = T(1e-5), T momentum = T(0.1));

  Matrix<T> Forward(const Matrix<T> &x, Mode mode);
  Matrix<T> Backward(const Matrix<T> &dy);
  void Collect(const std::string &prefix, ParamList<T> *params);
  void CollectBuffers(const std::string &prefix, BufferList<T> *buffers);

  Param<T> scale, shift;
  Matrix<T> running_mean, running_var;  // 1 x dim

 private:
  T eps_ = T(1e-5), momentum_ = T(0.1);
  Matrix<T> xhat_;
  RowVector<T> inv_std_;
  bool cached_ = false;
};

template <typename T>
class Relu {
 public:
  Matrix<T> Forward(const Matrix<T> &x, Mode mode);
  Matrix<T> Backward(const Matrix<T> &dy);
  /// Hash of which cached outputs are positive (0 without a cache).
  uint64_t ActivePattern() const;

 private:
  Matrix<T> y_;
  bool cached_ = false;
};

/// Exact (erf) GELU.
template <typename T>
class Gelu {
 public:
  Matrix<T> Forward(const Matrix<T> &x, Mode mode);
  Matrix<T> Backward(const Matrix<T> &dy);

 private:
  Matrix<T> x_;
  bool cached_ = false;
};

/// Per-sequence mean and standard deviation over time, concatenated:
/// [mean | sqrt(var + eps)], var with 1/L normalization.
template <typename T>
class StatsPool {
 public:
  explicit StatsPool(T eps = T(1e-8)) : eps_(eps) {}

  Matrix<T> Forward(const SeqBatch<T> &x, Mode mode);
  SeqBatch<T> Backward(const Matrix<T> &dy);

 private:
  T eps_;
  SeqBatch<T> x_;
  Matrix<T> mean_, std_;
  bool cached_ = false;
};

/// Row-wise x / (||x|| + eps); eps keeps zero rows finite.
template <typename T>
class L2Normalize {
 public:
  explicit L2Normalize(T eps = T(1e-12)) : eps_(eps) {}

  Matrix<T> Forward(const Matrix<T> &x, Mode mode);
  Matrix<T> Backward(const Matrix<T> &dy);

 private:
  T eps_;
  Matrix<T> x_;
  Eigen::Matrix<T, Eigen::Dynamic, 1> norm_;
  bool cached_ = false;
};

}  // namespace sdpn::net

#endif  // SDPN_NET_LAYERS_H_
