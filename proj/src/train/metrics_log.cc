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

#include "sdpn/train/metrics_log.h"

#include <charconv>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "sdpn/error.h"

namespace sdpn::train {

std::string FormatMetricsRecord(const MetricsRecord &r) {
  return fmt::format("step={} epoch={} lr={:.9g} m_ema={:.9g} l_ce={:.9g} "
                     "l_dr={:.9g} total={:.9g} wall_ms={:.3f}",
                     r.step, r.epoch, r.lr, r.m_ema, r.l_ce, r.l_dr, r.total,
                     r.wall_ms);
}

MetricsRecord ParseMetricsRecord(const std::string &line) {
  MetricsRecord r;
  std::istringstream in(line);
  std::string token;
  while (in >> token) {
    const auto eq = token.find('=');
    if (eq == std::string::npos) throw FormatError("bad metrics token '" + token + "'");
    const std::string key = token.substr(0, eq);
    const std::string value = token.substr(eq + 1);
    double v = 0.0;
    auto [p, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
    if (ec != std::errc()) throw FormatError("bad metrics value '" + token + "'");
    if (key == "step") r.step = static_cast<int64_t>(v);
    else if (key == "epoch") r.epoch = static_cast<int64_t>(v);
    else if (key == "lr") r.lr = v;
    else if (key == "m_ema") r.m_ema = v;
    else if (key == "l_ce") r.l_ce = v;
    else if (key == "l_dr") r.l_dr = v;
    else if (key == "total") r.total = v;
    else if (key == "wall_ms") r.wall_ms = v;
  }
  return r;
}

MetricsLog::MetricsLog(std::filesystem::path path) : path_(std::move(path)) {
  if (std::filesystem::exists(path_)) {
    records_ = Read(path_);
    if (!records_.empty()) last_step_ = records_.back().step;
  }
}

void MetricsLog::Append(const MetricsRecord &record) {
  if (record.step <= last_step_)
    throw ValidationError("metrics log steps must increase");
  last_step_ = record.step;
  records_.push_back(record);
  if (path_.empty()) return;
  std::ofstream out(path_, std::ios::app);
  if (!out) throw IoError("cannot append to " + path_.string());
  out << FormatMetricsRecord(record) << '\n';
}

void MetricsLog::TruncateAfter(int64_t step) {
  while (!records_.empty() && records_.back().step > step) records_.pop_back();
  last_step_ = records_.empty() ? -1 : records_.back().step;
  if (path_.empty()) return;
  std::ofstream out(path_, std::ios::trunc);
  if (!out) throw IoError("cannot rewrite " + path_.string());
  for (const auto &r : records_) out << FormatMetricsRecord(r) << '\n';
}

std::vector<MetricsRecord> MetricsLog::Read(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<MetricsRecord> out;
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) out.push_back(ParseMetricsRecord(line));
  return out;
}

}  // namespace sdpn::train
