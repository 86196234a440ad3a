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

#ifndef SDPN_DATAIO_MANIFEST_H_
#define SDPN_DATAIO_MANIFEST_H_

#include <filesystem>
#include <string>
#include <vector>

namespace sdpn::dataio {

struct ManifestEntry {
  std::string utterance_id;
  std::string speaker_id;
  std::string path;  // relative paths resolve against the manifest directory
  double duration_s = 0.0;

  bool operator==(const ManifestEntry &) const = default;
};

struct Manifest {
  std::vector<ManifestEntry> entries;
  // Directory that relative entry paths are resolved against.
  std::filesystem::path base_dir;

  std::filesystem::path Resolve(const ManifestEntry &entry) const;
  // Index of the entry with this utterance id, or -1.
  long Find(const std::string &utterance_id) const;
  size_t size() const { return entries.size(); }
  bool empty() const { return entries.empty(); }
};

/// Checks unique utterance ids and positive durations.
void ValidateManifest(const Manifest &manifest);

/// Line format: utterance_id TAB speaker_id TAB path TAB duration_s.
/// With check_paths, every entry must resolve to an existing file.
Manifest LoadManifest(const std::filesystem::path &path,
                      bool check_paths = true);
void SaveManifest(const Manifest &manifest, const std::filesystem::path &path);

}  // namespace sdpn::dataio

#endif  // SDPN_DATAIO_MANIFEST_H_
