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

#include "sdpn/train/checkpoint.h"

#include <cstring>
#include <fstream>
#include <iterator>

#include <zlib.h>

#include "sdpn/error.h"

namespace sdpn::train {

namespace {

constexpr char kMagic[8] = {'S', 'D', 'P', 'N', 'C', 'K', 'P', 'T'};
constexpr size_t kHeaderBytes = 8 + 4 + 8 + 4;

template <typename U>
void Put(std::string *out, U v) {
  char buf[sizeof(U)];
  std::memcpy(buf, &v, sizeof(U));
  out->append(buf, sizeof(U));
}

void PutString(std::string *out, const std::string &s) {
  Put<uint32_t>(out, static_cast<uint32_t>(s.size()));
  out->append(s);
}

class Reader {
 public:
  Reader(const char *data, size_t size) : data_(data), size_(size) {}

  template <typename U>
  U Get() {
    Need(sizeof(U));
    U v;
    std::memcpy(&v, data_ + pos_, sizeof(U));
    pos_ += sizeof(U);
    return v;
  }
  std::string GetString() {
    const uint32_t n = Get<uint32_t>();
    Need(n);
    std::string s(data_ + pos_, n);
    pos_ += n;
    return s;
  }
  void GetBytes(void *dst, size_t n) {
    Need(n);
    std::memcpy(dst, data_ + pos_, n);
    pos_ += n;
  }
  bool done() const { return pos_ == size_; }

 private:
  void Need(size_t n) const {
    if (size_ - pos_ < n) throw IntegrityError("checkpoint payload is truncated");
  }
  const char *data_;
  size_t size_;
  size_t pos_ = 0;
};

uint32_t Crc32(const char *data, size_t size) {
  uLong crc = crc32(0L, Z_NULL, 0);
  size_t off = 0;
  while (off < size) {
    const uInt chunk = static_cast<uInt>(std::min<size_t>(size - off, 1u << 30));
    crc = crc32(crc, reinterpret_cast<const Bytef *>(data + off), chunk);
    off += chunk;
  }
  return static_cast<uint32_t>(crc);
}

}  // namespace

const NamedTensor *Checkpoint::Find(const std::string &name) const {
  for (const auto &t : tensors)
    if (t.name == name) return &t;
  return nullptr;
}

std::string SerializeCheckpoint(const Checkpoint &ckpt) {
  std::string payload;
  Put<int64_t>(&payload, ckpt.epoch);
  Put<int64_t>(&payload, ckpt.step);
  PutString(&payload, ckpt.config_json);
  PutString(&payload, ckpt.rng_state);
  Put<uint32_t>(&payload, static_cast<uint32_t>(ckpt.tensors.size()));
  for (const auto &t : ckpt.tensors) {
    int64_t count = 1;
    for (int64_t d : t.shape) count *= d;
    if (count != static_cast<int64_t>(t.data.size()))
      throw ShapeError("tensor " + t.name + " shape does not match its data");
    PutString(&payload, t.name);
    Put<uint32_t>(&payload, static_cast<uint32_t>(t.shape.size()));
    for (int64_t d : t.shape) Put<int64_t>(&payload, d);
    payload.append(reinterpret_cast<const char *>(t.data.data()),
                   t.data.size() * sizeof(float));
  }
  std::string out(kMagic, sizeof(kMagic));
  Put<uint32_t>(&out, ckpt.version);
  Put<uint64_t>(&out, payload.size());
  Put<uint32_t>(&out, Crc32(payload.data(), payload.size()));
  out += payload;
  return out;
}

Checkpoint DeserializeCheckpoint(const std::string &bytes) {
  if (bytes.size() < kHeaderBytes || std::memcmp(bytes.data(), kMagic, 8) != 0)
    throw IntegrityError("not an SDPN checkpoint (bad magic or short header)");
  Reader header(bytes.data() + 8, kHeaderBytes - 8);
  const uint32_t version = header.Get<uint32_t>();
  if (version != kCheckpointVersion)
    throw VersionError("checkpoint version " + std::to_string(version) +
                       " is incompatible with supported version " +
                       std::to_string(kCheckpointVersion));
  const uint64_t payload_size = header.Get<uint64_t>();
  const uint32_t crc = header.Get<uint32_t>();
  if (bytes.size() - kHeaderBytes != payload_size)
    throw IntegrityError("checkpoint size mismatch (truncated or padded file)");
  const char *payload = bytes.data() + kHeaderBytes;
  if (Crc32(payload, payload_size) != crc)
    throw IntegrityError("checkpoint checksum mismatch");

  Reader r(payload, payload_size);
  Checkpoint ckpt;
  ckpt.version = version;
  ckpt.epoch = r.Get<int64_t>();
  ckpt.step = r.Get<int64_t>();
  ckpt.config_json = r.GetString();
  ckpt.rng_state = r.GetString();
  const uint32_t n = r.Get<uint32_t>();
  ckpt.tensors.resize(n);
  for (auto &t : ckpt.tensors) {
    t.name = r.GetString();
    const uint32_t ndim = r.Get<uint32_t>();
    int64_t count = 1;
    t.shape.resize(ndim);
    for (auto &d : t.shape) {
      d = r.Get<int64_t>();
      if (d < 0) throw IntegrityError("negative tensor dimension");
      count *= d;
    }
    t.data.resize(static_cast<size_t>(count));
    r.GetBytes(t.data.data(), t.data.size() * sizeof(float));
  }
  if (!r.done()) throw IntegrityError("trailing bytes in checkpoint payload");
  return ckpt;
}

void SaveCheckpoint(const Checkpoint &ckpt, const std::filesystem::path &path) {
  const std::string bytes = SerializeCheckpoint(ckpt);
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write failed for " + tmp);
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot move checkpoint into place: " + ec.message());
}

Checkpoint LoadCheckpoint(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return DeserializeCheckpoint(bytes);
}

}  // namespace sdpn::train
