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

#ifndef SDPN_EVAL_SCORING_H_
#define SDPN_EVAL_SCORING_H_

#include <cstdint>
#include <filesystem>
#include <mutex>
#include <ostream>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "sdpn/core/sdpn.h"
#include "sdpn/dataio/manifest.h"
#include "sdpn/eval/metrics.h"
#include "sdpn/pipeline/fbank.h"

namespace sdpn::eval {

using Embedding = std::vector<float>;
using EvalModel = core::SdpnModel<float>;

struct Trial {
  bool is_target = false;
  std::string enroll;
  std::string test;

  bool operator==(const Trial &) const = default;
};

using TrialList = std::vector<Trial>;

/// Lines of `is_target(0/1) enroll_id test_id`.
TrialList ReadTrials(const std::filesystem::path &path);
void WriteTrials(const TrialList &trials, const std::filesystem::path &path);

/// Full-utterance FBank through the teacher (or student) encoder in eval
/// mode. No cropping, no augmentation.
Embedding ExtractEmbedding(EvalModel &model, const dataio::Waveform &wave,
                           const pipeline::Fbank &fbank, bool use_student = false);

/// a.b / (|a| |b|). Throws on a zero vector or a length mismatch.
double CosineScore(std::span<const float> a, std::span<const float> b);

/// Extracts each utterance at most once.
class EmbeddingCache {
 public:
  EmbeddingCache(EvalModel &model, const dataio::Manifest &manifest,
                 const pipeline::Fbank &fbank, bool use_student = false);

  const Embedding &Get(const std::string &utterance_id);
  long extractions() const { return extractions_; }

 private:
  EvalModel &model_;
  const dataio::Manifest &manifest_;
  const pipeline::Fbank &fbank_;
  bool use_student_;
  std::mutex mu_;
  std::unordered_map<std::string, Embedding> cache_;
  long extractions_ = 0;
};

struct TrialReport {
  size_t n_trials = 0;
  EerResult eer;
  DcfResult dcf;
  TrialScoreSet scores;
  long n_extracted = 0;
};

/// Scores every trial with cosine similarity and computes EER and minDCF.
/// Throws ValidationError naming the first unknown utterance id.
TrialReport RunTrials(EvalModel &model, const dataio::Manifest &manifest,
                      const TrialList &trials, const pipeline::Fbank &fbank,
                      const DcfParams &params = {}, bool use_student = false);

/// `key: value` report lines.
void WriteReport(const TrialReport &report, std::ostream &out);

/// Tab separated `score is_target enroll test` rows with a header.
void WriteScoreTable(const TrialReport &report, const TrialList &trials,
                     std::ostream &out);

/// Samples n_target same-speaker and n_nontarget cross-speaker pairs of
/// distinct utterances. Without replacement while the pool lasts, cycling
/// through a reshuffled pool afterwards.
TrialList MakeTrials(const dataio::Manifest &manifest, int n_target,
                     int n_nontarget, uint64_t seed);

/// One line per utterance: id followed by the embedding values.
void WriteEmbeddings(const std::vector<std::string> &ids,
                     const std::vector<Embedding> &embeddings,
                     const std::filesystem::path &path);
void ReadEmbeddings(const std::filesystem::path &path, std::vector<std::string> *ids,
                    std::vector<Embedding> *embeddings);

/// Mean nearest-neighbour distance between L2-normalized embeddings.
double MeanMinPairwiseDistance(const std::vector<Embedding> &embeddings);

}  // namespace sdpn::eval

#endif  // SDPN_EVAL_SCORING_H_
