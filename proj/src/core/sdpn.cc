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

#include "sdpn/core/sdpn.h"

#include <cmath>
#include <limits>
#include <numbers>

#include "sdpn/error.h"
#include "sdpn/random.h"

namespace sdpn::core {

namespace {
constexpr double kProbFloor = 1e-12;

template <typename T>
void RequireFinite(const Matrix<T> &m, const char *what) {
  if (!m.allFinite()) throw NumericError(std::string(what) + " contains non-finite values");
}
}  // namespace

void ValidateSdpnConfig(const SdpnConfig &c) {
  if (!(c.temps.teacher > 0) || !(c.temps.student > 0))
    throw ConfigError("temperatures must be positive");
  if (c.temps.teacher > c.temps.student)
    throw ConfigError("teacher temperature must not exceed student temperature");
  if (c.sinkhorn.n_iters < 1) throw ConfigError("sinkhorn needs >= 1 iteration");
  if (!(c.sinkhorn.eps > 0)) throw ConfigError("sinkhorn eps must be positive");
  if (c.use_prototypes && c.n_prototypes < 1)
    throw ConfigError("need at least one prototype");
  if (!(c.mu >= 0) || !std::isfinite(c.mu)) throw ConfigError("mu must be >= 0");
  if (!(c.dr_floor > 0)) throw ConfigError("diversity floor must be positive");
}

LossBreakdown TotalLoss(double l_ce, double l_dr, double mu) {
  if (!std::isfinite(l_ce) || !std::isfinite(l_dr) || !std::isfinite(mu))
    throw NumericError("non-finite loss component");
  return LossBreakdown{l_ce, l_dr, mu, l_ce + mu * l_dr};
}

Matrix<double> SinkhornKnopp(const Matrix<double> &logits,
                             const SinkhornConfig &config) {
  RequireFinite(logits, "teacher logits");
  const auto b = logits.rows(), k = logits.cols();
  if (b < 1 || k < 1) throw ShapeError("sinkhorn: empty logits");
  Matrix<double> q(b, k);
  for (Eigen::Index i = 0; i < b; ++i) {
    const double mx = logits.row(i).maxCoeff();
    q.row(i) = (logits.row(i).array() - mx).exp().matrix();
  }
  const double col_target = 1.0 / static_cast<double>(k);
  const double row_target = 1.0 / static_cast<double>(b);
  for (int it = 0; it < config.n_iters; ++it) {
    for (Eigen::Index j = 0; j < k; ++j) {
      const double s = std::max(q.col(j).sum(), config.eps);
      q.col(j) *= col_target / s;
    }
    for (Eigen::Index i = 0; i < b; ++i) {
      const double s = std::max(q.row(i).sum(), config.eps);
      q.row(i) *= row_target / s;
    }
  }
  q *= static_cast<double>(b);
  return q;
}

template <typename T>
Matrix<T> TeacherDistribution(const Matrix<T> &projections,
                              const Matrix<T> &prototypes, double tau_t,
                              const SinkhornConfig &config) {
  if (projections.cols() != prototypes.cols())
    throw ShapeError("teacher projections and prototypes differ in dimension");
  const Matrix<double> logits =
      (projections.template cast<double>() *
       prototypes.template cast<double>().transpose()) / tau_t;
  return SinkhornKnopp(logits, config).template cast<T>();
}

template <typename T>
Matrix<T> Softmax(const Matrix<T> &logits) {
  RequireFinite(logits, "logits");
  Matrix<T> p(logits.rows(), logits.cols());
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const T mx = logits.row(i).maxCoeff();
    p.row(i) = (logits.row(i).array() - mx).exp().matrix();
    p.row(i) /= p.row(i).sum();
  }
  return p;
}

template <typename T>
Matrix<T> StudentDistribution(const Matrix<T> &projections,
                              const Matrix<T> &prototypes, double tau_s) {
  if (projections.cols() != prototypes.cols())
    throw ShapeError("student projections and prototypes differ in dimension");
  Matrix<T> logits = projections * prototypes.transpose();
  logits /= static_cast<T>(tau_s);
  return Softmax<T>(logits);
}

template <typename T>
T CrossEntropyLoss(const Matrix<T> &p_teacher, const Matrix<T> &p_student,
                   int views_per_utterance, Matrix<T> *d_logits) {
  if (views_per_utterance < 1) throw ValidationError("need >= 1 view per utterance");
  if (p_student.rows() != p_teacher.rows() * views_per_utterance ||
      p_student.cols() != p_teacher.cols())
    throw ValidationError("teacher rows (" + std::to_string(p_teacher.rows()) +
                          ") and student rows (" + std::to_string(p_student.rows()) +
                          ") are not aligned for " +
                          std::to_string(views_per_utterance) + " views");
  const auto rows = p_student.rows(), k = p_student.cols();
  const T inv_rows = T(1) / static_cast<T>(rows);
  if (d_logits) d_logits->resize(rows, k);
  double total = 0.0;
  for (Eigen::Index r = 0; r < rows; ++r) {
    const auto a = p_teacher.row(r / views_per_utterance);
    const auto p = p_student.row(r);
    double row_loss = 0.0;
    T mass = T(0);
    for (Eigen::Index j = 0; j < k; ++j) {
      const bool live = p(j) > T(kProbFloor);
      row_loss -= static_cast<double>(a(j)) *
                  std::log(live ? static_cast<double>(p(j)) : kProbFloor);
      if (live) mass += a(j);
    }
    total += row_loss;
    if (d_logits) {
      for (Eigen::Index j = 0; j < k; ++j) {
        const bool live = p(j) > T(kProbFloor);
        (*d_logits)(r, j) = (p(j) * mass - (live ? a(j) : T(0))) * inv_rows;
      }
    }
  }
  return static_cast<T>(total / static_cast<double>(rows));
}

template <typename T>
T DiversityLoss(const Matrix<T> &embeddings, double floor, bool literal,
                Matrix<T> *grad, std::vector<Eigen::Index> *nearest) {
  const auto n = embeddings.rows();
  if (n < 2) throw ValidationError("diversity loss needs at least two embeddings");
  net::L2Normalize<T> norm;
  const Matrix<T> x = norm.Forward(embeddings, net::Mode::kTrain);
  const T scale = (literal ? T(n) : T(1)) / T(n);
  Matrix<T> gx = Matrix<T>::Zero(n, x.cols());
  double total = 0.0;
  if (nearest) nearest->clear();
  for (Eigen::Index i = 0; i < n; ++i) {
    Eigen::Index best = -1;
    T best_d = std::numeric_limits<T>::infinity();
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j == i) continue;
      const T d = (x.row(i) - x.row(j)).norm();
      if (d < best_d) {
        best_d = d;
        best = j;
      }
    }
    const bool live = best_d > T(floor);
    if (nearest) nearest->push_back(live ? best : -1);
    total += std::log(live ? static_cast<double>(best_d) : floor);
    if (grad && live) {
      const auto diff = (x.row(i) - x.row(best)) / (best_d * best_d);
      gx.row(i) -= scale * diff;
      gx.row(best) += scale * diff;
    }
  }
  if (grad) *grad = norm.Backward(gx);
  return static_cast<T>(-static_cast<double>(scale) * total);
}

double MeanNearestNeighbourDistance(const Matrix<double> &embeddings) {
  const auto n = embeddings.rows();
  if (n < 2) throw ValidationError("need at least two embeddings");
  Matrix<double> x = embeddings;
  for (Eigen::Index i = 0; i < n; ++i) x.row(i) /= (x.row(i).norm() + 1e-12);
  double acc = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < n; ++j)
      if (j != i) best = std::min(best, (x.row(i) - x.row(j)).norm());
    acc += best;
  }
  return acc / static_cast<double>(n);
}

template <typename T>
void EmaUpdate(net::Network<T> *teacher, net::Network<T> &student, double m) {
  if (!(m >= 0.0 && m <= 1.0)) throw ConfigError("EMA momentum must lie in [0, 1]");
  auto tp = teacher->Params();
  auto sp = student.Params();
  auto tb = teacher->Buffers();
  auto sb = student.Buffers();
  if (tp.size() != sp.size() || tb.size() != sb.size())
    throw ShapeError("EMA: teacher and student architectures differ");
  const T mt = static_cast<T>(m), ms = static_cast<T>(1.0 - m);
  for (size_t i = 0; i < tp.size(); ++i) {
    auto &t = tp[i].second->value;
    const auto &s = sp[i].second->value;
    if (t.rows() != s.rows() || t.cols() != s.cols())
      throw ShapeError("EMA: shape mismatch for " + tp[i].first);
    t = mt * t + ms * s;
  }
  for (size_t i = 0; i < tb.size(); ++i) *tb[i].second = *sb[i].second;
}

double EmaMomentum(long step, long total_steps, double m0) {
  if (total_steps <= 0) return 1.0;
  const double frac = std::clamp(static_cast<double>(step) / total_steps, 0.0, 1.0);
  return 1.0 - (1.0 - m0) * 0.5 * (std::cos(std::numbers::pi * frac) + 1.0);
}

// -------------------------------------------------------------- SdpnModel

template <typename T>
SdpnModel<T>::SdpnModel(const net::NetworkConfig &net_config,
                        const SdpnConfig &config, uint64_t seed)
    : student(net_config, StreamSeed(seed, {10})), config_(config) {
  ValidateSdpnConfig(config);
  teacher = student;
  prototypes.kind = net::ParamKind::kPrototype;
  const int d = net_config.head.out_dim;
  if (config.use_prototypes) {
    prototypes.Resize(config.n_prototypes, d);
    Rng rng(StreamSeed(seed, {11}));
    for (Eigen::Index i = 0; i < prototypes.value.size(); ++i)
      prototypes.value.data()[i] = static_cast<T>(Gaussian(rng));
    NormalizePrototypes();
  } else {
    prototypes.Resize(d, d);
    prototypes.value.setIdentity();
  }
}

template <typename T>
void SdpnModel<T>::NormalizePrototypes() {
  if (!config_.use_prototypes) return;
  for (Eigen::Index i = 0; i < prototypes.value.rows(); ++i) {
    const T n = prototypes.value.row(i).norm();
    if (n > T(0)) prototypes.value.row(i) /= n;
  }
}

template <typename T>
Matrix<T> SdpnModel<T>::TeacherTargets(const net::SeqBatch<T> &globals) {
  const Matrix<T> emb = teacher.Embed(globals, net::Mode::kTrain);
  const Matrix<T> proj = teacher.Project(emb, net::Mode::kTrain);
  return TeacherDistribution<T>(proj, prototypes.value, config_.temps.teacher,
                                config_.sinkhorn);
}

template <typename T>
LossBreakdown SdpnModel<T>::StudentLoss(const net::SeqBatch<T> &locals,
                                        const Matrix<T> &p_teacher,
                                        int views_per_utterance) {
  const auto n = p_teacher.rows();
  if (n < 2) throw ValidationError("SDPN step needs a batch of at least 2 utterances");
  if (locals.num_sequences() != n * views_per_utterance)
    throw ValidationError("local view count does not match the teacher batch");
  cached_ = false;
  views_ = views_per_utterance;
  p_teacher_ = p_teacher;

  const Matrix<T> emb = student.Embed(locals, net::Mode::kTrain);
  projections_ = student.Project(emb, net::Mode::kTrain);
  p_student_ = StudentDistribution<T>(projections_, prototypes.value,
                                      config_.temps.student);
  const T l_ce = CrossEntropyLoss<T>(p_teacher_, p_student_, views_, &d_logits_);

  // Diversity term on per-utterance means of normalized view embeddings.
  const Matrix<T> unit = view_norm_.Forward(emb, net::Mode::kTrain);
  Matrix<T> means(n, unit.cols());
  for (Eigen::Index i = 0; i < n; ++i)
    means.row(i) = unit.middleRows(i * views_, views_).colwise().mean();
  const T l_dr = DiversityLoss<T>(means, config_.dr_floor, config_.dr_literal, &d_dr_,
                                   &dr_nearest_);
  l_dr_ = static_cast<double>(l_dr);

  LossBreakdown out = TotalLoss(static_cast<double>(l_ce), l_dr_, config_.mu);
  cached_ = true;
  return out;
}

template <typename T>
LossBreakdown SdpnModel<T>::Forward(std::span<const pipeline::CropSet *const> batch) {
  std::vector<const pipeline::FeatureMatrix *> globals, locals;
  for (const auto *crop : batch) {
    globals.push_back(&crop->global);
    for (const auto &l : crop->locals) locals.push_back(&l);
  }
  if (globals.size() < 2)
    throw ValidationError("SDPN step needs a batch of at least 2 utterances");
  const Matrix<T> p_tea = TeacherTargets(net::StackFeatures<T>(globals));
  return StudentLoss(net::StackFeatures<T>(locals), p_tea, pipeline::kNumLocalViews);
}

template <typename T>
uint64_t SdpnModel<T>::RegimeSignature() const {
  uint64_t h = student.encoder.ActivationSignature();
  for (Eigen::Index j : dr_nearest_) h = Mix64(h ^ static_cast<uint64_t>(j + 2));
  return h;
}

template <typename T>
GradientSet<T> SdpnModel<T>::Backward() {
  if (!cached_) throw StateError("SDPN backward without a cached forward");
  cached_ = false;
  student.ZeroGrad();
  prototypes.ZeroGrad();

  const T inv_tau = static_cast<T>(1.0 / config_.temps.student);
  const Matrix<T> d_proj = (d_logits_ * prototypes.value) * inv_tau;
  if (config_.use_prototypes)
    prototypes.grad.noalias() += (d_logits_.transpose() * projections_) * inv_tau;
  Matrix<T> d_emb = student.head.Backward(d_proj);

  const auto n = d_dr_.rows();
  Matrix<T> d_unit(n * views_, d_dr_.cols());
  const T w = static_cast<T>(config_.mu) / static_cast<T>(views_);
  for (Eigen::Index i = 0; i < n; ++i)
    for (int v = 0; v < views_; ++v) d_unit.row(i * views_ + v) = w * d_dr_.row(i);
  d_emb += view_norm_.Backward(d_unit);
  student.encoder.Backward(d_emb);

  GradientSet<T> grads;
  for (auto &[name, p] : TrainableParams()) grads.entries.emplace_back(name, p->grad);
  return grads;
}

template <typename T>
net::ParamList<T> SdpnModel<T>::TrainableParams() {
  net::ParamList<T> out;
  for (auto &[name, p] : student.Params()) out.emplace_back("student." + name, p);
  if (config_.use_prototypes) out.emplace_back("prototypes", &prototypes);
  return out;
}

#define SDPN_CORE_INSTANTIATE(T)                                                   \
  template Matrix<T> TeacherDistribution<T>(const Matrix<T> &, const Matrix<T> &,  \
                                            double, const SinkhornConfig &);       \
  template Matrix<T> Softmax<T>(const Matrix<T> &);                                \
  template Matrix<T> StudentDistribution<T>(const Matrix<T> &, const Matrix<T> &,  \
                                            double);                               \
  template T CrossEntropyLoss<T>(const Matrix<T> &, const Matrix<T> &, int,        \
                                 Matrix<T> *);                                     \
  template T DiversityLoss<T>(const Matrix<T> &, double, bool, Matrix<T> *,      \
                              std::vector<Eigen::Index> *);                    \
  template void EmaUpdate<T>(net::Network<T> *, net::Network<T> &, double);        \
  template class SdpnModel<T>;

SDPN_CORE_INSTANTIATE(float)
SDPN_CORE_INSTANTIATE(double)

}  // namespace sdpn::core
