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

#ifndef SDPN_NET_NETWORK_H_
#define SDPN_NET_NETWORK_H_

#include <cstdint>
#include <span>
#include <vector>

#include "sdpn/net/layers.h"
#include "sdpn/pipeline/fbank.h"

namespace sdpn::net {

struct EncoderConfig {
  int input_dim = 80;
  std::vector<int> channels{128, 128, 128};
  std::vector<int> kernels{5, 3, 3};
  std::vector<int> dilations{1, 2, 3};
  int embed_dim = 512;
};

struct HeadConfig {
  int hidden1 = 2048;
  int hidden2 = 2048;
  int out_dim = 256;
};

struct NetworkConfig {
  EncoderConfig encoder;
  HeadConfig head;
};

void ValidateNetworkConfig(const NetworkConfig &config);

/// TDNN stack (conv -> ReLU -> batch-norm per block), statistics pooling and
/// a linear projection to the speaker embedding.
template <typename T>
class Encoder {
 public:
  Encoder() = default;
  explicit Encoder(const EncoderConfig &config);

  void Init(Rng &rng);
  /// One embedding row per input sequence.
  Matrix<T> Forward(const SeqBatch<T> &features, Mode mode);
  void Backward(const Matrix<T> &d_embedding);

  void Collect(ParamList<T> *params, BufferList<T> *buffers);
  /// Minimum number of input frames.
  int MinFrames() const;
  /// Hash of the ReLU on/off pattern of the last train-mode forward.
  uint64_t ActivationSignature() const;
  const EncoderConfig &config() const { return config_; }

 private:
  struct Block {
    Conv1d<T> conv;
    Relu<T> relu;
    BatchNorm<T> bn;
  };
  EncoderConfig config_;
  std::vector<Block> blocks_;
  StatsPool<T> pool_;
  Linear<T> proj_;
};

/// Projection head: linear -> BN -> GELU -> linear -> BN -> GELU -> linear
/// -> L2 normalization. The first two linears carry no bias (the following
/// batch-norm would cancel it).
template <typename T>
class Head {
 public:
  Head() = default;
  Head(int in_dim, const HeadConfig &config);

  void Init(Rng &rng);
  Matrix<T> Forward(const Matrix<T> &embedding, Mode mode);
  Matrix<T> Backward(const Matrix<T> &d_projection);
  void Collect(ParamList<T> *params, BufferList<T> *buffers);

 private:
  Linear<T> fc1_, fc2_, fc3_;
  BatchNorm<T> bn1_, bn2_;
  Gelu<T> act1_, act2_;
  L2Normalize<T> norm_;
};

/// One copy of encoder + head (the student or the teacher).
template <typename T>
class Network {
 public:
  Network() = default;
  Network(const NetworkConfig &config, uint64_t seed);

  Matrix<T> Embed(const SeqBatch<T> &features, Mode mode) {
    return encoder.Forward(features, mode);
  }
  Matrix<T> Project(const Matrix<T> &embedding, Mode mode) {
    return head.Forward(embedding, mode);
  }

  /// Parameters in a fixed order with stable names.
  ParamList<T> Params();
  BufferList<T> Buffers();
  void ZeroGrad();
  const NetworkConfig &config() const { return config_; }

  Encoder<T> encoder;
  Head<T> head;

 private:
  NetworkConfig config_;
};

/// Stacks feature matrices into a batch, converting to T.
template <typename T>
SeqBatch<T> StackFeatures(std::span<const pipeline::FeatureMatrix *const> feats);

template <typename T>
SeqBatch<T> StackFeatures(const pipeline::FeatureMatrix &feats) {
  const pipeline::FeatureMatrix *p = &feats;
  return StackFeatures<T>(std::span<const pipeline::FeatureMatrix *const>(&p, 1));
}

/// Copies values of all parameters and buffers between networks of the same
/// architecture, possibly across precisions.
template <typename To, typename From>
void CopyNetwork(Network<From> &from, Network<To> *to);

}  // namespace sdpn::net

#endif  // SDPN_NET_NETWORK_H_
