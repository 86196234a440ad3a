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

#include "sdpn/net/network.h"

#include "sdpn/error.h"

namespace sdpn::net {

void ValidateNetworkConfig(const NetworkConfig &config) {
  const auto &e = config.encoder;
  if (e.input_dim < 1 || e.embed_dim < 1)
    throw ConfigError("encoder dimensions must be positive");
  if (e.channels.empty()) throw ConfigError("encoder needs at least one layer");
  if (e.kernels.size() != e.channels.size() ||
      e.dilations.size() != e.channels.size())
    throw ConfigError("encoder channels, kernels and dilations differ in length");
  for (size_t i = 0; i < e.channels.size(); ++i)
    if (e.channels[i] < 1 || e.kernels[i] < 1 || e.dilations[i] < 1)
      throw ConfigError("encoder layer sizes must be positive");
  const auto &h = config.head;
  if (h.hidden1 < 1 || h.hidden2 < 1 || h.out_dim < 1)
    throw ConfigError("head dimensions must be positive");
}

template <typename T>
Encoder<T>::Encoder(const EncoderConfig &config) : config_(config) {
  int in = config.input_dim;
  for (size_t i = 0; i < config.channels.size(); ++i) {
    const int out = config.channels[i];
    blocks_.push_back(Block{Conv1d<T>(in, out, config.kernels[i], config.dilations[i]),
                            Relu<T>(), BatchNorm<T>(out)});
    in = out;
  }
  proj_ = Linear<T>(2 * in, config.embed_dim, /*with_bias=*/false);
}

template <typename T>
void Encoder<T>::Init(Rng &rng) {
  for (auto &b : blocks_) b.conv.Init(rng);
  proj_.Init(rng);
}

template <typename T>
uint64_t Encoder<T>::ActivationSignature() const {
  uint64_t h = 0;
  for (const auto &b : blocks_) h = Mix64(h ^ b.relu.ActivePattern());
  return h;
}

template <typename T>
int Encoder<T>::MinFrames() const {
  int ctx = 0;
  for (const auto &b : blocks_) ctx += b.conv.context();
  return ctx + 1;
}

template <typename T>
Matrix<T> Encoder<T>::Forward(const SeqBatch<T> &features, Mode mode) {
  if (features.data.cols() != config_.input_dim)
    throw ShapeError("encoder: features have " + std::to_string(features.data.cols()) +
                     " mel bins, expected " + std::to_string(config_.input_dim));
  SeqBatch<T> x = features;
  for (auto &b : blocks_) {
    x = b.conv.Forward(x, mode);
    x.data = b.bn.Forward(b.relu.Forward(x.data, mode), mode);
  }
  return proj_.Forward(pool_.Forward(x, mode), mode);
}

template <typename T>
void Encoder<T>::Backward(const Matrix<T> &d_embedding) {
  SeqBatch<T> dx = pool_.Backward(proj_.Backward(d_embedding));
  for (size_t i = blocks_.size(); i-- > 0;) {
    auto &b = blocks_[i];
    dx.data = b.relu.Backward(b.bn.Backward(dx.data));
    dx = b.conv.Backward(dx, /*need_input_grad=*/i > 0);
  }
}

template <typename T>
void Encoder<T>::Collect(ParamList<T> *params, BufferList<T> *buffers) {
  for (size_t i = 0; i < blocks_.size(); ++i) {
    const std::string p = "encoder.tdnn" + std::to_string(i);
    if (params) {
      blocks_[i].conv.Collect(p + ".conv", params);
      blocks_[i].bn.Collect(p + ".bn", params);
    }
    if (buffers) blocks_[i].bn.CollectBuffers(p + ".bn", buffers);
  }
  if (params) proj_.Collect("encoder.proj", params);
}

template <typename T>
Head<T>::Head(int in_dim, const HeadConfig &config)
    : fc1_(in_dim, config.hidden1, false),
      fc2_(config.hidden1, config.hidden2, false),
      fc3_(config.hidden2, config.out_dim, true),
      bn1_(config.hidden1),
      bn2_(config.hidden2) {}

template <typename T>
void Head<T>::Init(Rng &rng) {
  fc1_.Init(rng);
  fc2_.Init(rng);
  fc3_.Init(rng);
}

template <typename T>
Matrix<T> Head<T>::Forward(const Matrix<T> &embedding, Mode mode) {
  Matrix<T> h = act1_.Forward(bn1_.Forward(fc1_.Forward(embedding, mode), mode), mode);
  h = act2_.Forward(bn2_.Forward(fc2_.Forward(h, mode), mode), mode);
  return norm_.Forward(fc3_.Forward(h, mode), mode);
}

template <typename T>
Matrix<T> Head<T>::Backward(const Matrix<T> &d_projection) {
  Matrix<T> d = fc3_.Backward(norm_.Backward(d_projection));
  d = fc2_.Backward(bn2_.Backward(act2_.Backward(d)));
  return fc1_.Backward(bn1_.Backward(act1_.Backward(d)));
}

template <typename T>
void Head<T>::Collect(ParamList<T> *params, BufferList<T> *buffers) {
  if (params) {
    fc1_.Collect("head.fc1", params);
    bn1_.Collect("head.bn1", params);
    fc2_.Collect("head.fc2", params);
    bn2_.Collect("head.bn2", params);
    fc3_.Collect("head.fc3", params);
  }
  if (buffers) {
    bn1_.CollectBuffers("head.bn1", buffers);
    bn2_.CollectBuffers("head.bn2", buffers);
  }
}

template <typename T>
Network<T>::Network(const NetworkConfig &config, uint64_t seed)
    : encoder(config.encoder),
      head(config.encoder.embed_dim, config.head),
      config_(config) {
  ValidateNetworkConfig(config);
  Rng rng(seed);
  encoder.Init(rng);
  head.Init(rng);
}

template <typename T>
ParamList<T> Network<T>::Params() {
  ParamList<T> params;
  encoder.Collect(&params, nullptr);
  head.Collect(&params, nullptr);
  return params;
}

template <typename T>
BufferList<T> Network<T>::Buffers() {
  BufferList<T> buffers;
  encoder.Collect(nullptr, &buffers);
  head.Collect(nullptr, &buffers);
  return buffers;
}

template <typename T>
void Network<T>::ZeroGrad() {
  for (auto &[name, p] : Params()) p->ZeroGrad();
}

template <typename T>
SeqBatch<T> StackFeatures(std::span<const pipeline::FeatureMatrix *const> feats) {
  SeqBatch<T> batch;
  Eigen::Index rows = 0, cols = -1;
  for (const auto *f : feats) {
    if (cols >= 0 && f->cols() != cols)
      throw ShapeError("feature matrices differ in mel dimension");
    cols = f->cols();
    rows += f->rows();
    batch.lengths.push_back(static_cast<int>(f->rows()));
  }
  batch.data.resize(rows, std::max<Eigen::Index>(cols, 0));
  Eigen::Index off = 0;
  for (const auto *f : feats) {
    batch.data.middleRows(off, f->rows()) = f->template cast<T>();
    off += f->rows();
  }
  return batch;
}

template <typename To, typename From>
void CopyNetwork(Network<From> &from, Network<To> *to) {
  auto src = from.Params();
  auto dst = to->Params();
  auto src_buf = from.Buffers();
  auto dst_buf = to->Buffers();
  if (src.size() != dst.size() || src_buf.size() != dst_buf.size())
    throw ShapeError("copy between networks of different architecture");
  for (size_t i = 0; i < src.size(); ++i) {
    if (src[i].second->value.rows() != dst[i].second->value.rows() ||
        src[i].second->value.cols() != dst[i].second->value.cols())
      throw ShapeError("shape mismatch for " + src[i].first);
    dst[i].second->value = src[i].second->value.template cast<To>();
  }
  for (size_t i = 0; i < src_buf.size(); ++i)
    *dst_buf[i].second = src_buf[i].second->template cast<To>();
}

template class Encoder<float>;
template class Encoder<double>;
template class Head<float>;
template class Head<double>;
template class Network<float>;
template class Network<double>;
template SeqBatch<float> StackFeatures<float>(std::span<const pipeline::FeatureMatrix *const>);
template SeqBatch<double> StackFeatures<double>(std::span<const pipeline::FeatureMatrix *const>);
template void CopyNetwork<float, float>(Network<float> &, Network<float> *);
template void CopyNetwork<double, float>(Network<float> &, Network<double> *);
template void CopyNetwork<float, double>(Network<double> &, Network<float> *);
template void CopyNetwork<double, double>(Network<double> &, Network<double> *);

}  // namespace sdpn::net
