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

#ifndef SDPN_TRAIN_METRICS_LOG_H_
#define SDPN_TRAIN_METRICS_LOG_H_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace sdpn::train {

struct MetricsRecord {
  int64_t step = 0;
  int64_t epoch = 0;
  double lr = 0.0;
  double m_ema = 0.0;
  double l_ce = 0.0;
  double l_dr = 0.0;
  double total = 0.0;
  double wall_ms = 0.0;
};

/// One `key=value` record per line.
std::string FormatMetricsRecord(const MetricsRecord &record);
MetricsRecord ParseMetricsRecord(const std::string &line);

/// Append-only log file; step numbers must increase.
class MetricsLog {
 public:
  MetricsLog() = default;
  explicit MetricsLog(std::filesystem::path path);

  void Append(const MetricsRecord &record);
  /// Drops records after `step` and rewrites the file (used on resume).
  void TruncateAfter(int64_t step);
  const std::vector<MetricsRecord> &records() const { return records_; }

  static std::vector<MetricsRecord> Read(const std::filesystem::path &path);

 private:
  std::filesystem::path path_;
  std::vector<MetricsRecord> records_;
  int64_t last_step_ = -1;
};

}  // namespace sdpn::train

#endif  // SDPN_TRAIN_METRICS_LOG_H_
