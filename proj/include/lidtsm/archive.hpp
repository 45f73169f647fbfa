// lidtsm/archive.hpp

// Copyright 2026  The lidtsm Authors

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

// Feature archive: concatenated per-utterance records
//   "LTFA" | u32 version | u32 T | u32 D | f32 frame_rate | u32 id length | id
//   | T*D f32 row-major
// all little-endian.

#pragma once

#include <string>
#include <vector>

#include "lidtsm/features.hpp"
#include "lidtsm/util.hpp"

namespace lidtsm::archive {

inline constexpr char kMagic[] = "LTFA";
inline constexpr uint32_t kVersion = 1;

inline void append_record(ByteWriter &out, const features::FeatureMatrix &f) {
  out.put_bytes(std::string_view(kMagic, 4));
  out.put<uint32_t>(kVersion);
  out.put<uint32_t>(static_cast<uint32_t>(f.num_frames()));
  out.put<uint32_t>(static_cast<uint32_t>(f.dim()));
  out.put<float>(static_cast<float>(f.frame_rate));
  out.put_string(f.utterance_id);
  for (double v : f.values.data) out.put<float>(static_cast<float>(v));
}

inline std::vector<unsigned char> encode(const std::vector<features::FeatureMatrix> &records) {
  ByteWriter out;
  for (const auto &r : records) append_record(out, r);
  return out.bytes();
}

inline std::vector<features::FeatureMatrix> decode(std::span<const unsigned char> bytes) {
  ByteReader in(bytes);
  std::vector<features::FeatureMatrix> out;
  while (!in.done()) {
    require(in.get_bytes(4) == std::string_view(kMagic, 4), ErrorCode::kBadContainer,
            "feature archive record has a bad magic number");
    const uint32_t version = in.get<uint32_t>();
    require(version == kVersion, ErrorCode::kBadContainer,
            "unsupported feature archive version " + std::to_string(version));
    features::FeatureMatrix f;
    const uint32_t t = in.get<uint32_t>();
    const uint32_t d = in.get<uint32_t>();
    f.frame_rate = in.get<float>();
    f.utterance_id = in.get_string();
    require(in.remaining() >= static_cast<size_t>(t) * d * 4, ErrorCode::kBadContainer,
            "truncated feature archive record " + f.utterance_id);
    f.values = Matrix<double>(t, d);
    for (double &v : f.values.data) v = in.get<float>();
    out.push_back(std::move(f));
  }
  return out;
}

inline void write(const std::string &path, const std::vector<features::FeatureMatrix> &records) {
  write_file_bytes(path, encode(records));
}

inline std::vector<features::FeatureMatrix> read(const std::string &path) {
  const auto bytes = read_file_bytes(path);
  return decode(bytes);
}

}  // namespace lidtsm::archive
