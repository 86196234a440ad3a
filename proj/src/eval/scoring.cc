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

#include "sdpn/eval/scoring.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "sdpn/dataio/wav.h"
#include "sdpn/error.h"
#include "sdpn/random.h"

namespace sdpn::eval {

namespace fs = std::filesystem;

TrialList ReadTrials(const fs::path &path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open trial list " + path.string());
  TrialList trials;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream is(line);
    std::string label, extra;
    Trial t;
    if (!(is >> label >> t.enroll >> t.test) || (is >> extra) ||
        (label != "0" && label != "1"))
      throw FormatError(fmt::format("{}:{}: expected 'is_target enroll test'",
                                    path.string(), lineno));
    t.is_target = label == "1";
    trials.push_back(std::move(t));
  }
  if (trials.empty()) throw ValidationError("trial list " + path.string() + " is empty");
  return trials;
}

void WriteTrials(const TrialList &trials, const fs::path &path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  for (const auto &t : trials)
    out << (t.is_target ? 1 : 0) << ' ' << t.enroll << ' ' << t.test << '\n';
  if (!out) throw IoError("failed writing " + path.string());
}

Embedding ExtractEmbedding(EvalModel &model, const dataio::Waveform &wave,
                           const pipeline::Fbank &fbank, bool use_student) {
  const pipeline::FeatureMatrix feats = fbank.Compute(wave);
  auto &network = use_student ? model.student : model.teacher;
  const int min_frames = network.encoder.MinFrames();
  if (feats.rows() < min_frames)
    throw ValidationError(fmt::format("utterance has {} frames, the encoder needs {}",
                                      feats.rows(), min_frames));
  const net::Matrix<float> emb =
      network.Embed(net::StackFeatures<float>(feats), net::Mode::kEval);
  return Embedding(emb.data(), emb.data() + emb.size());
}

double CosineScore(std::span<const float> a, std::span<const float> b) {
  if (a.size() != b.size())
    throw ShapeError(fmt::format("cosine of vectors of length {} and {}", a.size(), b.size()));
  double ab = 0, aa = 0, bb = 0;
  for (size_t i = 0; i < a.size(); ++i) {
    ab += static_cast<double>(a[i]) * b[i];
    aa += static_cast<double>(a[i]) * a[i];
    bb += static_cast<double>(b[i]) * b[i];
  }
  if (aa == 0 || bb == 0) throw ValidationError("cosine score of a zero vector");
  return std::clamp(ab / std::sqrt(aa * bb), -1.0, 1.0);
}

EmbeddingCache::EmbeddingCache(EvalModel &model, const dataio::Manifest &manifest,
                               const pipeline::Fbank &fbank, bool use_student)
    : model_(model), manifest_(manifest), fbank_(fbank), use_student_(use_student) {}

const Embedding &EmbeddingCache::Get(const std::string &id) {
  std::lock_guard<std::mutex> lock(mu_);
  auto it = cache_.find(id);
  if (it != cache_.end()) return it->second;
  const long idx = manifest_.Find(id);
  if (idx < 0) throw ValidationError("utterance '" + id + "' is not in the manifest");
  const auto wave = dataio::ReadWav(manifest_.Resolve(manifest_.entries[idx]));
  ++extractions_;
  return cache_.emplace(id, ExtractEmbedding(model_, wave, fbank_, use_student_))
      .first->second;
}

TrialReport RunTrials(EvalModel &model, const dataio::Manifest &manifest,
                      const TrialList &trials, const pipeline::Fbank &fbank,
                      const DcfParams &params, bool use_student) {
  if (trials.empty()) throw ValidationError("empty trial list");
  ValidateDcfParams(params);
  for (const auto &t : trials)
    for (const auto *id : {&t.enroll, &t.test})
      if (manifest.Find(*id) < 0)
        throw ValidationError("utterance '" + *id + "' is not in the manifest");
  EmbeddingCache cache(model, manifest, fbank, use_student);
  TrialReport report;
  for (const auto &t : trials)
    report.scores.Add(CosineScore(cache.Get(t.enroll), cache.Get(t.test)), t.is_target);
  report.n_trials = trials.size();
  report.eer = ComputeEer(report.scores);
  report.dcf = ComputeMinDcf(report.scores, params);
  report.n_extracted = cache.extractions();
  return report;
}

void WriteReport(const TrialReport &r, std::ostream &out) {
  out << fmt::format("n_trials: {}\n", r.n_trials);
  out << fmt::format("eer: {:.6f}\n", r.eer.eer);
  out << fmt::format("eer_percent: {:.4f}\n", 100.0 * r.eer.eer);
  out << fmt::format("eer_threshold: {:.6f}\n", r.eer.threshold);
  out << fmt::format("min_dcf: {:.6f}\n", r.dcf.min_dcf);
  out << fmt::format("min_dcf_threshold: {:.6f}\n", r.dcf.threshold);
}

void WriteScoreTable(const TrialReport &r, const TrialList &trials, std::ostream &out) {
  if (trials.size() != r.scores.size())
    throw ValidationError("score table needs the trial list that produced it");
  out << "score\tis_target\tenroll\ttest\n";
  for (size_t i = 0; i < trials.size(); ++i)
    out << fmt::format("{:.9g}\t{}\t{}\t{}\n", r.scores.scores[i],
                       r.scores.is_target[i] ? 1 : 0, trials[i].enroll, trials[i].test);
}

namespace {

std::vector<Trial> Draw(std::vector<Trial> pool, int n, Rng &rng) {
  std::vector<Trial> out;
  out.reserve(n);
  while (static_cast<int>(out.size()) < n) {
    std::shuffle(pool.begin(), pool.end(), rng);
    const size_t take = std::min(pool.size(), static_cast<size_t>(n) - out.size());
    out.insert(out.end(), pool.begin(), pool.begin() + take);
  }
  return out;
}

}  // namespace

TrialList MakeTrials(const dataio::Manifest &manifest, int n_target, int n_nontarget,
                     uint64_t seed) {
  if (n_target < 0 || n_nontarget < 0) throw ConfigError("trial counts must be >= 0");
  if (n_target + n_nontarget == 0) throw ConfigError("no trials requested");
  const auto &e = manifest.entries;
  std::vector<Trial> same, diff;
  for (size_t i = 0; i < e.size(); ++i)
    for (size_t j = i + 1; j < e.size(); ++j) {
      const bool t = e[i].speaker_id == e[j].speaker_id;
      (t ? same : diff).push_back({t, e[i].utterance_id, e[j].utterance_id});
    }
  if (n_target > 0 && same.empty())
    throw ValidationError("no speaker has two utterances; cannot form target trials");
  if (n_nontarget > 0 && diff.empty())
    throw ValidationError("fewer than two speakers; cannot form non-target trials");
  Rng rng(StreamSeed(seed, {40}));
  TrialList trials = Draw(std::move(same), n_target, rng);
  auto non = Draw(std::move(diff), n_nontarget, rng);
  trials.insert(trials.end(), non.begin(), non.end());
  std::shuffle(trials.begin(), trials.end(), rng);
  return trials;
}

void WriteEmbeddings(const std::vector<std::string> &ids,
                     const std::vector<Embedding> &embeddings, const fs::path &path) {
  if (ids.size() != embeddings.size())
    throw ValidationError("embedding and id counts differ");
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  for (size_t i = 0; i < ids.size(); ++i) {
    out << ids[i];
    for (float v : embeddings[i]) out << ' ' << fmt::format("{:.9g}", v);
    out << '\n';
  }
  if (!out) throw IoError("failed writing " + path.string());
}

void ReadEmbeddings(const fs::path &path, std::vector<std::string> *ids,
                    std::vector<Embedding> *embeddings) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  ids->clear();
  embeddings->clear();
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream is(line);
    std::string id;
    if (!(is >> id)) continue;
    Embedding v;
    std::string tok;
    while (is >> tok) {
      float x = 0;
      const auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), x);
      if (ec != std::errc() || p != tok.data() + tok.size())
        throw FormatError("bad embedding value '" + tok + "' for " + id);
      v.push_back(x);
    }
    ids->push_back(std::move(id));
    embeddings->push_back(std::move(v));
  }
}

double MeanMinPairwiseDistance(const std::vector<Embedding> &embeddings) {
  if (embeddings.empty()) throw ValidationError("no embeddings");
  net::Matrix<double> m(embeddings.size(), embeddings.front().size());
  for (size_t i = 0; i < embeddings.size(); ++i) {
    if (embeddings[i].size() != static_cast<size_t>(m.cols()))
      throw ShapeError("embeddings differ in length");
    for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = embeddings[i][j];
  }
  return core::MeanNearestNeighbourDistance(m);
}

}  // namespace sdpn::eval
