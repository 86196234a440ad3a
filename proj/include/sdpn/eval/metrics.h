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

#ifndef SDPN_EVAL_METRICS_H_
#define SDPN_EVAL_METRICS_H_

#include <span>
#include <vector>

namespace sdpn::eval {

/// Scores and target labels of a trial list, index aligned.
struct TrialScoreSet {
  std::vector<double> scores;
  std::vector<bool> is_target;

  void Add(double score, bool target) {
    scores.push_back(score);
    is_target.push_back(target);
  }
  size_t size() const { return scores.size(); }
};

/// Requires equal lengths, finite scores and both classes present.
void ValidateScoreSet(const TrialScoreSet &set);

struct DcfParams {
  double p_target = 0.05;
  double c_fa = 1.0;
  double c_miss = 1.0;
};

void ValidateDcfParams(const DcfParams &params);

struct OperatingPoint {
  double threshold = 0.0;
  double p_miss = 0.0;  // fraction of targets scoring below the threshold
  double p_fa = 0.0;    // fraction of non-targets scoring at or above it
};

/// Operating points at a threshold below every score, at every midpoint
/// between adjacent distinct scores and above every score, in increasing
/// threshold order.
std::vector<OperatingPoint> SweepOperatingPoints(const TrialScoreSet &set);

struct EerResult {
  double eer = 0.0;
  double threshold = 0.0;
};

/// Rate where P_miss and P_fa cross, interpolated linearly between the two
/// bracketing sweep points.
EerResult ComputeEer(const TrialScoreSet &set);

struct DcfResult {
  double min_dcf = 0.0;
  double threshold = 0.0;
};

/// Minimum over the sweep of
///   (c_miss p_target P_miss + c_fa (1 - p_target) P_fa) /
///   min(c_miss p_target, c_fa (1 - p_target)).
DcfResult ComputeMinDcf(const TrialScoreSet &set, const DcfParams &params = {});

}  // namespace sdpn::eval

#endif  // SDPN_EVAL_METRICS_H_
