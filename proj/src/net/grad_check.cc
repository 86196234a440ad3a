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

#include "sdpn/net/grad_check.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "sdpn/error.h"
#include "sdpn/random.h"

namespace sdpn::net {

double RelativeError(double analytic, double numeric, double floor) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), floor});
  return std::abs(analytic - numeric) / denom;
}

GradCheckResult GradCheck(const ParamList<double> &params,
                          const std::function<double()> &loss,
                          const GradCheckOptions &options) {
  std::vector<long> offsets;
  long total = 0;
  for (const auto &[name, p] : params) {
    if (p->grad.rows() != p->value.rows() || p->grad.cols() != p->value.cols())
      throw ShapeError("gradient shape mismatch for " + name);
    offsets.push_back(total);
    total += static_cast<long>(p->value.size());
  }

  std::vector<long> probes(total);
  std::iota(probes.begin(), probes.end(), 0L);
  if (options.n_probe > 0 && options.n_probe < total) {
    Rng rng(options.seed);
    std::shuffle(probes.begin(), probes.end(), rng);
    probes.resize(options.n_probe);
    std::sort(probes.begin(), probes.end());
  }

  uint64_t base_regime = 0;
  if (options.regime) {
    loss();
    base_regime = options.regime();
  }

  GradCheckResult result;
  size_t which = 0;
  for (long flat : probes) {
    while (which + 1 < offsets.size() && offsets[which + 1] <= flat) ++which;
    const auto &[name, p] = params[which];
    const long idx = flat - offsets[which];
    double &v = p->value.data()[idx];
    const double saved = v;
    v = saved + options.eps;
    const double up = loss();
    const uint64_t up_regime = options.regime ? options.regime() : 0;
    v = saved - options.eps;
    const double down = loss();
    const uint64_t down_regime = options.regime ? options.regime() : 0;
    v = saved;
    if (options.regime && (up_regime != base_regime || down_regime != base_regime)) {
      ++result.n_skipped;
      continue;
    }
    const double numeric = (up - down) / (2.0 * options.eps);
    const double err = RelativeError(p->grad.data()[idx], numeric, options.abs_floor);
    auto &fam = result.by_family[ParamKindName(p->kind)];
    fam = std::max(fam, err);
    if (err > result.max_rel_error || result.worst_index < 0) {
      if (err >= result.max_rel_error) {
        result.max_rel_error = err;
        result.worst_param = name;
        result.worst_index = idx;
      }
    }
    ++result.n_probed;
  }
  return result;
}

}  // namespace sdpn::net
