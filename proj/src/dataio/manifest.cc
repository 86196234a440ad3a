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

#include "sdpn/dataio/manifest.h"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include "sdpn/error.h"

namespace sdpn::dataio {

namespace {

std::vector<std::string> SplitTabs(const std::string &line) {
  std::vector<std::string> fields;
  size_t start = 0;
  while (true) {
    const size_t tab = line.find('\t', start);
    fields.push_back(line.substr(start, tab - start));
    if (tab == std::string::npos) break;
    start = tab + 1;
  }
  return fields;
}

std::string FormatDouble(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, end);
}

}  // namespace

std::filesystem::path Manifest::Resolve(const ManifestEntry &entry) const {
  std::filesystem::path p(entry.path);
  if (p.is_absolute() || base_dir.empty()) return p;
  return base_dir / p;
}

long Manifest::Find(const std::string &utterance_id) const {
  for (size_t i = 0; i < entries.size(); ++i)
    if (entries[i].utterance_id == utterance_id) return static_cast<long>(i);
  return -1;
}

void ValidateManifest(const Manifest &manifest) {
  std::unordered_set<std::string> seen;
  for (const auto &e : manifest.entries) {
    if (e.utterance_id.empty())
      throw ValidationError("manifest entry with empty utterance id");
    if (!seen.insert(e.utterance_id).second)
      throw ValidationError("duplicate utterance id '" + e.utterance_id + "'");
    if (!(e.duration_s > 0.0))
      throw ValidationError("non-positive duration for '" + e.utterance_id +
                            "'");
  }
}

Manifest LoadManifest(const std::filesystem::path &path, bool check_paths) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest " + path.string());
  Manifest manifest;
  manifest.base_dir = path.parent_path();
  std::unordered_set<std::string> seen;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::string where =
        path.string() + ", line " + std::to_string(line_no) + ": ";
    auto fields = SplitTabs(line);
    if (fields.size() != 4)
      throw FormatError(where + "expected 4 tab-separated fields, got " +
                        std::to_string(fields.size()));
    ManifestEntry e{fields[0], fields[1], fields[2], 0.0};
    const auto &d = fields[3];
    auto [ptr, ec] = std::from_chars(d.data(), d.data() + d.size(), e.duration_s);
    if (ec != std::errc() || ptr != d.data() + d.size())
      throw FormatError(where + "unparsable duration '" + d + "'");
    if (e.utterance_id.empty() || e.speaker_id.empty() || e.path.empty())
      throw FormatError(where + "empty field");
    if (!(e.duration_s > 0.0) || !std::isfinite(e.duration_s))
      throw ValidationError(where + "duration must be positive");
    if (!seen.insert(e.utterance_id).second)
      throw ValidationError(where + "duplicate utterance id '" +
                            e.utterance_id + "'");
    manifest.entries.push_back(std::move(e));
  }
  if (check_paths) {
    for (const auto &e : manifest.entries)
      if (!std::filesystem::exists(manifest.Resolve(e)))
        throw IoError("manifest entry '" + e.utterance_id +
                      "' points to missing file " +
                      manifest.Resolve(e).string());
  }
  return manifest;
}

void SaveManifest(const Manifest &manifest, const std::filesystem::path &path) {
  ValidateManifest(manifest);
  std::ostringstream os;
  for (const auto &e : manifest.entries) {
    for (const auto *field : {&e.utterance_id, &e.speaker_id, &e.path})
      if (field->find_first_of("\t\n") != std::string::npos)
        throw ValidationError("manifest field contains tab or newline");
    os << e.utterance_id << '\t' << e.speaker_id << '\t' << e.path << '\t'
       << FormatDouble(e.duration_s) << '\n';
  }
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write manifest " + path.string());
  out << os.str();
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace sdpn::dataio
