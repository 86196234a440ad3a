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

#ifndef SDPN_NET_GRAD_CHECK_H_
#define SDPN_NET_GRAD_CHECK_H_

#include <cstdint>
#include <functional>
#include <map>
#include <string>

#include "sdpn/net/types.h"

namespace sdpn::net {

struct GradCheckOptions {
  int n_probe = 0;  // <= 0 probes every scalar
  double eps = 1e-5;
  uint64_t seed = 0;
  // Gradients smaller than this are compared in absolute terms.
  double abs_floor = 1e-8;
  // Optional hash of the discrete state of the last loss() call (ReLU
  // masks, argmin choices). A probe whose +eps or -eps evaluation lands in
  // a different state than the unperturbed point straddles a kink, where
  // the central difference does not estimate the derivative; such probes
  // are counted in n_skipped and excluded from the error.
  std::function<uint64_t()> regime;
};

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::string worst_param;
  long worst_index = -1;
  long n_probed = 0;
  long n_skipped = 0;
  // Max relative error per ParamKind name.
  std::map<std::string, double> by_family;
};

/// Relative error |a - b| / max(|a|, |b|, floor).
double RelativeError(double analytic, double numeric, double floor = 1e-8);

/// Compares Param::grad (already filled by the caller) against central
/// differences (L(p + eps) - L(p - eps)) / (2 eps) of `loss`. Parameters are
/// restored after each probe.
GradCheckResult GradCheck(const ParamList<double> &params,
                          const std::function<double()> &loss,
                          const GradCheckOptions &options = {});

}  // namespace sdpn::net

#endif  // SDPN_NET_GRAD_CHECK_H_
