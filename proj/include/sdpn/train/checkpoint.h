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

#ifndef SDPN_TRAIN_CHECKPOINT_H_
#define SDPN_TRAIN_CHECKPOINT_H_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace sdpn::train {

inline constexpr uint32_t kCheckpointVersion = 1;

struct NamedTensor {
  std::string name;
  std::vector<int64_t> shape;
  std::vector<float> data;

  bool operator==(const NamedTensor &) const = default;
};

struct Checkpoint {
  uint32_t version = kCheckpointVersion;
  int64_t epoch = 0;  // completed epochs
  int64_t step = 0;   // completed optimizer steps
  std::string config_json;
  std::string rng_state;
  std::vector<NamedTensor> tensors;

  const NamedTensor *Find(const std::string &name) const;
  bool operator==(const Checkpoint &) const = default;
};

/// Container layout (little endian):
///   "SDPNCKPT" | u32 version | u64 payload bytes | u32 crc32(payload) | payload
/// payload: i64 epoch, i64 step, str config, str rng, u32 n, then per tensor
///   str name, u32 ndim, i64 dims[ndim], f32 data[prod(dims)]
/// with str = u32 length + bytes.
std::string SerializeCheckpoint(const Checkpoint &ckpt);
Checkpoint DeserializeCheckpoint(const std::string &bytes);

void SaveCheckpoint(const Checkpoint &ckpt, const std::filesystem::path &path);
Checkpoint LoadCheckpoint(const std::filesystem::path &path);

}  // namespace sdpn::train

#endif  // SDPN_TRAIN_CHECKPOINT_H_
