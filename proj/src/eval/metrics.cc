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

#include "sdpn/eval/metrics.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "sdpn/error.h"

namespace sdpn::eval {

void ValidateScoreSet(const TrialScoreSet &set) {
  if (set.scores.size() != set.is_target.size())
    throw ValidationError("score and label counts differ");
  size_t n_tar = 0;
  for (size_t i = 0; i < set.size(); ++i) {
    if (!std::isfinite(set.scores[i]))
      throw ValidationError("non-finite score at trial " + std::to_string(i));
    n_tar += set.is_target[i] ? 1 : 0;
  }
  if (n_tar == 0) throw ValidationError("trial scores contain no target trial");
  if (n_tar == set.size()) throw ValidationError("trial scores contain no non-target trial");
}

void ValidateDcfParams(const DcfParams &p) {
  if (!(p.p_target > 0 && p.p_target < 1))
    throw ConfigError("p_target must lie in (0, 1)");
  if (!(p.c_fa > 0) || !(p.c_miss > 0)) throw ConfigError("DCF costs must be positive");
}

std::vector<OperatingPoint> SweepOperatingPoints(const TrialScoreSet &set) {
  ValidateScoreSet(set);
  std::vector<size_t> idx(set.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(),
            [&](size_t a, size_t b) { return set.scores[a] < set.scores[b]; });
  double n_tar = 0, n_non = 0;
  for (bool t : set.is_target) (t ? n_tar : n_non) += 1;

  // Moving the threshold past a group of equal scores rejects the whole group.
  std::vector<OperatingPoint> points;
  const double lo = set.scores[idx.front()], hi = set.scores[idx.back()];
  points.push_back({lo - 1.0, 0.0, 1.0});
  double miss = 0, fa = n_non;
  size_t i = 0;
  while (i < idx.size()) {
    const double s = set.scores[idx[i]];
    while (i < idx.size() && set.scores[idx[i]] == s) {
      if (set.is_target[idx[i]])
        miss += 1;
      else
        fa -= 1;
      ++i;
    }
    const double t = i < idx.size() ? 0.5 * (s + set.scores[idx[i]]) : hi + 1.0;
    points.push_back({t, miss / n_tar, fa / n_non});
  }
  return points;
}

EerResult ComputeEer(const TrialScoreSet &set) {
  const auto pts = SweepOperatingPoints(set);
  // P_fa - P_miss goes from 1 down to -1; find the first point at or below 0.
  for (size_t k = 1; k < pts.size(); ++k) {
    const double d1 = pts[k].p_fa - pts[k].p_miss;
    if (d1 > 0) continue;
    const double d0 = pts[k - 1].p_fa - pts[k - 1].p_miss;
    const double a = d0 / (d0 - d1);
    EerResult r;
    r.eer = pts[k - 1].p_miss + a * (pts[k].p_miss - pts[k - 1].p_miss);
    r.threshold = pts[k - 1].threshold + a * (pts[k].threshold - pts[k - 1].threshold);
    return r;
  }
  throw NumericError("EER sweep did not cross");
}

DcfResult ComputeMinDcf(const TrialScoreSet &set, const DcfParams &params) {
  ValidateDcfParams(params);
  const auto pts = SweepOperatingPoints(set);
  const double w_miss = params.c_miss * params.p_target;
  const double w_fa = params.c_fa * (1.0 - params.p_target);
  const double norm = std::min(w_miss, w_fa);
  DcfResult best{std::numeric_limits<double>::infinity(), 0.0};
  for (const auto &p : pts) {
    const double dcf = (w_miss * p.p_miss + w_fa * p.p_fa) / norm;
    if (dcf < best.min_dcf) best = {dcf, p.threshold};
  }
  return best;
}

}  // namespace sdpn::eval
