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

#ifndef SDPN_CORE_SDPN_H_
#define SDPN_CORE_SDPN_H_

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "sdpn/net/network.h"
#include "sdpn/pipeline/multicrop.h"

namespace sdpn::core {

using net::Matrix;

struct Temperatures {
  double teacher = 0.04;
  double student = 0.1;
};

struct SinkhornConfig {
  int n_iters = 3;
  double eps = 1e-12;
};

struct SdpnConfig {
  Temperatures temps;
  SinkhornConfig sinkhorn;
  double mu = 0.1;
  int n_prototypes = 1024;
  // When false the head output itself is the logit vector (K = head dim)
  // and no prototype matrix is learned.
  bool use_prototypes = true;
  double dr_floor = 1e-4;
  // Multiply the diversity term by the batch size (literal double sum).
  bool dr_literal = false;
};

void ValidateSdpnConfig(const SdpnConfig &config);

struct LossBreakdown {
  double l_ce = 0.0;
  double l_dr = 0.0;
  double mu = 0.0;
  double total = 0.0;
};

/// total = l_ce + mu * l_dr.
LossBreakdown TotalLoss(double l_ce, double l_dr, double mu);

/// Sinkhorn-Knopp balancing of exp(logits - rowmax): n_iters rounds of
/// column scaling to 1/K then row scaling to 1/B, finally scaled by B so
/// every row is a distribution. Runs in double precision.
Matrix<double> SinkhornKnopp(const Matrix<double> &logits,
                             const SinkhornConfig &config);

/// Teacher targets Sknorm(projections C^T / tau_t). Never differentiated.
template <typename T>
Matrix<T> TeacherDistribution(const Matrix<T> &projections,
                              const Matrix<T> &prototypes, double tau_t,
                              const SinkhornConfig &config);

/// Row-wise softmax with max subtraction.
template <typename T>
Matrix<T> Softmax(const Matrix<T> &logits);

/// Softmax(projections C^T / tau_s).
template <typename T>
Matrix<T> StudentDistribution(const Matrix<T> &projections,
                              const Matrix<T> &prototypes, double tau_s);

/// Mean over the rows of p_student of -sum_k p_tea[k] log max(p_stu[k], 1e-12).
/// Student row i * views + v is paired with teacher row i. If d_logits is
/// given it receives the gradient with respect to the student logits (the
/// softmax input).
template <typename T>
T CrossEntropyLoss(const Matrix<T> &p_teacher, const Matrix<T> &p_student,
                   int views_per_utterance, Matrix<T> *d_logits = nullptr);

/// -(1/n) sum_i log max(min_{j != i} ||x_i - x_j||, floor) over L2-normalized
/// rows of `embeddings`. Ties take the lowest index. `grad`, if given,
/// receives the gradient with respect to the unnormalized rows. `nearest`,
/// if given, receives each row's nearest neighbour (-1 where floored).
template <typename T>
T DiversityLoss(const Matrix<T> &embeddings, double floor, bool literal = false,
                Matrix<T> *grad = nullptr,
                std::vector<Eigen::Index> *nearest = nullptr);

/// Mean over rows of the distance from each L2-normalized row to its nearest
/// other row.
double MeanNearestNeighbourDistance(const Matrix<double> &embeddings);

/// teacher <- m * teacher + (1 - m) * student; running stats copied.
template <typename T>
void EmaUpdate(net::Network<T> *teacher, net::Network<T> &student, double m);

/// Cosine ramp from m0 at step 0 to 1 at total_steps.
double EmaMomentum(long step, long total_steps, double m0);

/// Named gradients of the student parameters and the prototypes. Teacher
/// parameters never appear.
template <typename T>
struct GradientSet {
  std::vector<std::pair<std::string, Matrix<T>>> entries;

  const Matrix<T> *Find(const std::string &name) const {
    for (const auto &[n, g] : entries)
      if (n == name) return &g;
    return nullptr;
  }
};

/// Student and teacher networks plus the shared prototypes.
template <typename T>
class SdpnModel {
 public:
  SdpnModel() = default;
  SdpnModel(const net::NetworkConfig &net_config, const SdpnConfig &config,
            uint64_t seed);

  /// Teacher forward (batch statistics) on the global views.
  Matrix<T> TeacherTargets(const net::SeqBatch<T> &globals);

  /// Student forward on n * views local views against fixed teacher targets
  /// (n rows). Caches everything Backward() needs.
  LossBreakdown StudentLoss(const net::SeqBatch<T> &locals,
                            const Matrix<T> &p_teacher, int views_per_utterance);

  /// Full step forward on crop sets.
  LossBreakdown Forward(std::span<const pipeline::CropSet *const> batch);

  /// Gradients of the last StudentLoss()/Forward() total. Zeroes and fills
  /// Param::grad of the student and prototypes.
  GradientSet<T> Backward();

  /// Student parameters ("student.*") then "prototypes" if learned.
  net::ParamList<T> TrainableParams();

  void NormalizePrototypes();

  /// Hash of the discrete choices made by the last StudentLoss(): student
  /// ReLU masks and diversity nearest neighbours.
  uint64_t RegimeSignature() const;

  const Matrix<T> &last_teacher_distribution() const { return p_teacher_; }
  const SdpnConfig &config() const { return config_; }
  SdpnConfig &mutable_config() { return config_; }
  int num_prototypes() const { return static_cast<int>(prototypes.value.rows()); }

  net::Network<T> student;
  net::Network<T> teacher;
  net::Param<T> prototypes;  // K x d

 private:
  SdpnConfig config_;
  bool cached_ = false;
  int views_ = 0;
  Matrix<T> p_teacher_, p_student_, projections_, d_logits_, d_dr_;
  net::L2Normalize<T> view_norm_;
  double l_dr_ = 0.0;
  std::vector<Eigen::Index> dr_nearest_;
};

}  // namespace sdpn::core

#endif  // SDPN_CORE_SDPN_H_
