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

#include "sdpn/net/layers.h"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "sdpn/error.h"
#include "sdpn/random.h"

namespace sdpn::net {

const char *ParamKindName(ParamKind kind) {
  switch (kind) {
    case ParamKind::kConvWeight: return "conv_weight";
    case ParamKind::kLinearWeight: return "linear_weight";
    case ParamKind::kBias: return "bias";
    case ParamKind::kNormScale: return "norm_scale";
    case ParamKind::kNormShift: return "norm_shift";
    case ParamKind::kPrototype: return "prototype";
  }
  return "unknown";
}

namespace {

template <typename T>
void KaimingUniform(Matrix<T> *w, int fan_in, Rng &rng) {
  const double bound = std::sqrt(6.0 / fan_in);
  for (Eigen::Index i = 0; i < w->size(); ++i)
    w->data()[i] = static_cast<T>(Uniform(rng, -bound, bound));
}

void RequireCache(bool cached, const char *layer) {
  if (!cached)
    throw StateError(std::string(layer) +
                     ": backward called without a cached train-mode forward");
}

}  // namespace

// ---------------------------------------------------------------- Linear

template <typename T>
Linear<T>::Linear(int in_dim, int out_dim, bool with_bias) : with_bias_(with_bias) {
  weight.kind = ParamKind::kLinearWeight;
  weight.Resize(in_dim, out_dim);
  bias.kind = ParamKind::kBias;
  if (with_bias) bias.Resize(1, out_dim);
}

template <typename T>
void Linear<T>::Init(Rng &rng) {
  KaimingUniform(&weight.value, in_dim(), rng);
  if (with_bias_) bias.value.setZero();
}

template <typename T>
Matrix<T> Linear<T>::Forward(const Matrix<T> &x, Mode mode) {
  if (x.cols() != weight.value.rows())
    throw ShapeError("linear: input has " + std::to_string(x.cols()) +
                     " columns, expected " + std::to_string(weight.value.rows()));
  Matrix<T> y = x * weight.value;
  if (with_bias_) y.rowwise() += bias.value.row(0);
  cached_ = mode == Mode::kTrain;
  if (cached_) x_ = x;
  return y;
}

template <typename T>
Matrix<T> Linear<T>::Backward(const Matrix<T> &dy, bool need_input_grad) {
  RequireCache(cached_, "linear");
  cached_ = false;
  weight.grad.noalias() += x_.transpose() * dy;
  if (with_bias_) bias.grad.row(0) += dy.colwise().sum();
  if (!need_input_grad) return {};
  return dy * weight.value.transpose();
}

template <typename T>
void Linear<T>::Collect(const std::string &prefix, ParamList<T> *params) {
  params->emplace_back(prefix + ".weight", &weight);
  if (with_bias_) params->emplace_back(prefix + ".bias", &bias);
}

// ---------------------------------------------------------------- Conv1d

template <typename T>
Conv1d<T>::Conv1d(int in_dim, int out_dim, int kernel, int dilation)
    : in_(in_dim), out_(out_dim), kernel_(kernel), dilation_(dilation) {
  if (kernel < 1 || dilation < 1)
    throw ConfigError("conv1d: kernel and dilation must be >= 1");
  weight.kind = ParamKind::kConvWeight;
  weight.Resize(static_cast<Eigen::Index>(kernel) * in_dim, out_dim);
  bias.kind = ParamKind::kBias;
  bias.Resize(1, out_dim);
}

template <typename T>
void Conv1d<T>::Init(Rng &rng) {
  KaimingUniform(&weight.value, kernel_ * in_, rng);
  bias.value.setZero();
}

template <typename T>
Matrix<T> Conv1d<T>::Im2Col(const SeqBatch<T> &x) const {
  Eigen::Index out_rows = 0;
  for (int len : x.lengths) {
    if (len - context() < 1)
      throw ShapeError("conv1d: sequence of " + std::to_string(len) +
                       " frames is shorter than the receptive field (" +
                       std::to_string(context() + 1) + ")");
    out_rows += len - context();
  }
  Matrix<T> cols(out_rows, static_cast<Eigen::Index>(kernel_) * in_);
  Eigen::Index in_off = 0, out_off = 0;
  for (int len : x.lengths) {
    const int out_len = len - context();
    for (int j = 0; j < kernel_; ++j)
      cols.block(out_off, static_cast<Eigen::Index>(j) * in_, out_len, in_) =
          x.data.block(in_off + static_cast<Eigen::Index>(j) * dilation_, 0,
                       out_len, in_);
    in_off += len;
    out_off += out_len;
  }
  return cols;
}

template <typename T>
SeqBatch<T> Conv1d<T>::Forward(const SeqBatch<T> &x, Mode mode) {
  if (x.data.cols() != in_)
    throw ShapeError("conv1d: input has " + std::to_string(x.data.cols()) +
                     " channels, expected " + std::to_string(in_));
  Matrix<T> cols = Im2Col(x);
  SeqBatch<T> y;
  y.data.noalias() = cols * weight.value;
  y.data.rowwise() += bias.value.row(0);
  y.lengths.reserve(x.lengths.size());
  for (int len : x.lengths) y.lengths.push_back(len - context());
  cached_ = mode == Mode::kTrain;
  if (cached_) {
    cols_ = std::move(cols);
    in_lengths_ = x.lengths;
  }
  return y;
}

template <typename T>
SeqBatch<T> Conv1d<T>::Backward(const SeqBatch<T> &dy, bool need_input_grad) {
  RequireCache(cached_, "conv1d");
  cached_ = false;
  weight.grad.noalias() += cols_.transpose() * dy.data;
  bias.grad.row(0) += dy.data.colwise().sum();
  SeqBatch<T> dx;
  if (!need_input_grad) return dx;
  const Matrix<T> dcols = dy.data * weight.value.transpose();
  Eigen::Index total = 0;
  for (int len : in_lengths_) total += len;
  dx.data.setZero(total, in_);
  dx.lengths = in_lengths_;
  Eigen::Index in_off = 0, out_off = 0;
  for (int len : in_lengths_) {
    const int out_len = len - context();
    for (int j = 0; j < kernel_; ++j)
      dx.data.block(in_off + static_cast<Eigen::Index>(j) * dilation_, 0, out_len, in_) +=
          dcols.block(out_off, static_cast<Eigen::Index>(j) * in_, out_len, in_);
    in_off += len;
    out_off += out_len;
  }
  return dx;
}

template <typename T>
void Conv1d<T>::Collect(const std::string &prefix, ParamList<T> *params) {
  params->emplace_back(prefix + ".weight", &weight);
  params->emplace_back(prefix + ".bias", &bias);
}

// ------------------------------------------------------------- BatchNorm

template <typename T>
BatchNorm<T>::BatchNorm(int dim, T eps, T momentum) : eps_(eps), momentum_(momentum) {
  scale.kind = ParamKind::kNormScale;
  scale.Resize(1, dim);
  scale.value.setOnes();
  shift.kind = ParamKind::kNormShift;
  shift.Resize(1, dim);
  running_mean.setZero(1, dim);
  running_var.setOnes(1, dim);
}

template <typename T>
Matrix<T> BatchNorm<T>::Forward(const Matrix<T> &x, Mode mode) {
  if (x.cols() != scale.value.cols())
    throw ShapeError("batchnorm: input has " + std::to_string(x.cols()) +
                     " columns, expected " + std::to_string(scale.value.cols()));
  const auto n = x.rows();
  if (mode == Mode::kEval) {
    cached_ = false;
    const RowVector<T> inv = (running_var.row(0).array() + eps_).rsqrt().matrix();
    Matrix<T> y = x.rowwise() - running_mean.row(0);
    y.array().rowwise() *= (inv.array() * scale.value.row(0).array());
    y.rowwise() += shift.value.row(0);
    return y;
  }
  if (n < 1) throw ShapeError("batchnorm: empty batch");
  const RowVector<T> mean = x.colwise().mean();
  Matrix<T> xc = x.rowwise() - mean;
  const RowVector<T> var = xc.array().square().colwise().mean().matrix();
  inv_std_ = (var.array() + eps_).rsqrt().matrix();
  xc.array().rowwise() *= inv_std_.array();
  xhat_ = std::move(xc);
  cached_ = true;

  running_mean.row(0) = (T(1) - momentum_) * running_mean.row(0) + momentum_ * mean;
  const T unbias = n > 1 ? T(n) / T(n - 1) : T(1);
  running_var.row(0) = (T(1) - momentum_) * running_var.row(0) + (momentum_ * unbias) * var;

  Matrix<T> y = xhat_;
  y.array().rowwise() *= scale.value.row(0).array();
  y.rowwise() += shift.value.row(0);
  return y;
}

template <typename T>
Matrix<T> BatchNorm<T>::Backward(const Matrix<T> &dy) {
  RequireCache(cached_, "batchnorm");
  cached_ = false;
  const T n = static_cast<T>(dy.rows());
  scale.grad.row(0) += (dy.array() * xhat_.array()).colwise().sum().matrix();
  shift.grad.row(0) += dy.colwise().sum();
  Matrix<T> dxhat = dy;
  dxhat.array().rowwise() *= scale.value.row(0).array();
  const RowVector<T> sum_d = dxhat.colwise().sum();
  const RowVector<T> sum_dx = (dxhat.array() * xhat_.array()).colwise().sum().matrix();
  Matrix<T> dx = n * dxhat;
  dx.rowwise() -= sum_d;
  dx.array() -= xhat_.array().rowwise() * sum_dx.array();
  dx.array().rowwise() *= (inv_std_.array() / n);
  return dx;
}

template <typename T>
void BatchNorm<T>::Collect(const std::string &prefix, ParamList<T> *params) {
  params->emplace_back(prefix + ".scale", &scale);
  params->emplace_back(prefix + ".shift", &shift);
}

template <typename T>
void BatchNorm<T>::CollectBuffers(const std::string &prefix,
                                  BufferList<T> *buffers) {
  buffers->emplace_back(prefix + ".running_mean", &running_mean);
  buffers->emplace_back(prefix + ".running_var", &running_var);
}

// ----------------------------------------------------------- activations

template <typename T>
Matrix<T> Relu<T>::Forward(const Matrix<T> &x, Mode mode) {
  Matrix<T> y = x.cwiseMax(T(0));
  cached_ = mode == Mode::kTrain;
  if (cached_) y_ = y;
  return y;
}

template <typename T>
uint64_t Relu<T>::ActivePattern() const {
  if (!cached_) return 0;
  uint64_t h = Mix64(static_cast<uint64_t>(y_.size()));
  uint64_t word = 0;
  for (Eigen::Index i = 0; i < y_.size(); ++i) {
    word = (word << 1) | (y_.data()[i] > T(0) ? 1u : 0u);
    if (i % 64 == 63) {
      h = Mix64(h ^ word);
      word = 0;
    }
  }
  return Mix64(h ^ word);
}

template <typename T>
Matrix<T> Relu<T>::Backward(const Matrix<T> &dy) {
  RequireCache(cached_, "relu");
  cached_ = false;
  return (y_.array() > T(0)).select(dy, T(0));
}

template <typename T>
Matrix<T> Gelu<T>::Forward(const Matrix<T> &x, Mode mode) {
  const T inv_sqrt2 = T(1) / std::sqrt(T(2));
  Matrix<T> y = x.unaryExpr([inv_sqrt2](T v) {
    return T(0.5) * v * (T(1) + std::erf(v * inv_sqrt2));
  });
  cached_ = mode == Mode::kTrain;
  if (cached_) x_ = x;
  return y;
}

template <typename T>
Matrix<T> Gelu<T>::Backward(const Matrix<T> &dy) {
  RequireCache(cached_, "gelu");
  cached_ = false;
  const T inv_sqrt2 = T(1) / std::sqrt(T(2));
  const T inv_sqrt2pi = T(1) / std::sqrt(T(2) * std::numbers::pi_v<T>);
  Matrix<T> d = x_.unaryExpr([=](T v) {
    return T(0.5) * (T(1) + std::erf(v * inv_sqrt2)) +
           v * std::exp(T(-0.5) * v * v) * inv_sqrt2pi;
  });
  return d.cwiseProduct(dy);
}

// ------------------------------------------------------------- StatsPool

template <typename T>
Matrix<T> StatsPool<T>::Forward(const SeqBatch<T> &x, Mode mode) {
  const int b = x.num_sequences();
  const auto c = x.data.cols();
  Matrix<T> mean(b, c), sd(b, c);
  Eigen::Index off = 0;
  for (int i = 0; i < b; ++i) {
    const int len = x.lengths[i];
    if (len < 1) throw ShapeError("stats pooling: empty sequence");
    const auto seg = x.data.middleRows(off, len);
    mean.row(i) = seg.colwise().mean();
    const RowVector<T> var =
        (seg.rowwise() - mean.row(i)).array().square().colwise().mean().matrix();
    sd.row(i) = (var.array() + eps_).sqrt().matrix();
    off += len;
  }
  Matrix<T> y(b, 2 * c);
  y.leftCols(c) = mean;
  y.rightCols(c) = sd;
  cached_ = mode == Mode::kTrain;
  if (cached_) {
    x_ = x;
    mean_ = std::move(mean);
    std_ = std::move(sd);
  }
  return y;
}

template <typename T>
SeqBatch<T> StatsPool<T>::Backward(const Matrix<T> &dy) {
  RequireCache(cached_, "stats pooling");
  cached_ = false;
  const auto c = x_.data.cols();
  SeqBatch<T> dx;
  dx.lengths = x_.lengths;
  dx.data.resize(x_.data.rows(), c);
  Eigen::Index off = 0;
  for (int i = 0; i < x_.num_sequences(); ++i) {
    const int len = x_.lengths[i];
    const RowVector<T> dmean = dy.row(i).leftCols(c) / T(len);
    const RowVector<T> dstd_scaled =
        (dy.row(i).rightCols(c).array() / (std_.row(i).array() * T(len))).matrix();
    auto out = dx.data.middleRows(off, len);
    out = x_.data.middleRows(off, len).rowwise() - mean_.row(i);
    out.array().rowwise() *= dstd_scaled.array();
    out.rowwise() += dmean;
    off += len;
  }
  return dx;
}

// ----------------------------------------------------------- L2Normalize

template <typename T>
Matrix<T> L2Normalize<T>::Forward(const Matrix<T> &x, Mode mode) {
  Eigen::Matrix<T, Eigen::Dynamic, 1> norm = x.rowwise().norm();
  Matrix<T> y = x;
  for (Eigen::Index i = 0; i < x.rows(); ++i) y.row(i) /= std::max(norm(i), eps_);
  cached_ = mode == Mode::kTrain;
  if (cached_) {
    x_ = x;
    norm_ = std::move(norm);
  }
  return y;
}

template <typename T>
Matrix<T> L2Normalize<T>::Backward(const Matrix<T> &dy) {
  RequireCache(cached_, "l2 normalize");
  cached_ = false;
  Matrix<T> dx(dy.rows(), dy.cols());
  for (Eigen::Index i = 0; i < dy.rows(); ++i) {
    const T n = norm_(i);
    if (n > eps_)
      dx.row(i) = dy.row(i) / n - x_.row(i) * (x_.row(i).dot(dy.row(i)) / (n * n * n));
    else
      dx.row(i) = dy.row(i) / eps_;
  }
  return dx;
}

#define SDPN_INSTANTIATE(T)        \
  template class Linear<T>;        \
  template class Conv1d<T>;        \
  template class BatchNorm<T>;     \
  template class Relu<T>;          \
  template class Gelu<T>;          \
  template class StatsPool<T>;     \
  template class L2Normalize<T>;

SDPN_INSTANTIATE(float)
SDPN_INSTANTIATE(double)

}  // namespace sdpn::net
