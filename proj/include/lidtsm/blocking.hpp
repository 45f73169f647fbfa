// lidtsm/blocking.hpp

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

#pragma once

#include <algorithm>
#include <optional>
#include <string>
#include <vector>

#include "lidtsm/error.hpp"
#include "lidtsm/features.hpp"
#include "lidtsm/matrix.hpp"

namespace lidtsm::blocking {

struct BlockConfig {
  size_t block_length = 100;  // L_b, frames
  size_t block_step = 50;     // S_b, frames

  void validate() const {
    require(block_step >= 1 && block_step <= block_length, ErrorCode::kInvalidArgument,
            "block step must satisfy 1 <= S_b <= L_b");
  }
};

struct FeatureBlock {
  Matrix<double> values;  // block_length x D
  std::string utterance_id;
  size_t start_frame = 0;
  std::optional<int> label;
};

/// Tiles rows cyclically (output row i = input row i mod T) up to
/// `block_length` rows; longer inputs are returned unchanged.
inline features::FeatureMatrix repeat_pad(const features::FeatureMatrix &f, size_t block_length) {
  require(f.num_frames() >= 1, ErrorCode::kEmptyInput, "repeat_pad on an empty matrix");
  if (f.num_frames() >= block_length) return f;
  features::FeatureMatrix out = f;
  out.values = Matrix<double>(block_length, f.dim());
  for (size_t i = 0; i < block_length; ++i) {
    const auto src = f.values.row(i % f.num_frames());
    std::copy(src.begin(), src.end(), out.values.row(i).begin());
  }
  return out;
}

/// Start frames of the blocks cut from a T-frame sequence: the regular grid
/// 0, S_b, 2 S_b, ... plus a final block ending at the last frame unless the
/// grid already ends there. Sequences shorter than L_b yield a single block
/// at 0 (after padding).
inline std::vector<size_t> block_starts(size_t num_frames, const BlockConfig &cfg) {
  cfg.validate();
  require(num_frames >= 1, ErrorCode::kEmptyInput, "cannot block an empty sequence");
  if (num_frames <= cfg.block_length) return {0};
  std::vector<size_t> starts;
  for (size_t s = 0; s + cfg.block_length <= num_frames; s += cfg.block_step) starts.push_back(s);
  const size_t last = num_frames - cfg.block_length;
  if (starts.back() != last) starts.push_back(last);
  return starts;
}

/// Closed-form block count for T >= 1.
inline size_t block_count(size_t num_frames, const BlockConfig &cfg) {
  if (num_frames <= cfg.block_length) return 1;
  const size_t span = num_frames - cfg.block_length;
  return span / cfg.block_step + 1 + (span % cfg.block_step != 0 ? 1 : 0);
}

inline std::vector<FeatureBlock> make_blocks(const features::FeatureMatrix &f,
                                             const BlockConfig &cfg,
                                             std::optional<int> label = std::nullopt) {
  cfg.validate();
  require(f.num_frames() >= 1, ErrorCode::kEmptyInput, "cannot block an empty sequence");
  const auto padded = repeat_pad(f, cfg.block_length);
  const auto starts = block_starts(padded.num_frames(), cfg);
  std::vector<FeatureBlock> blocks;
  blocks.reserve(starts.size());
  const size_t d = f.dim();
  for (size_t s : starts) {
    FeatureBlock b;
    b.values = Matrix<double>(cfg.block_length, d);
    std::copy_n(padded.values.row(s).begin(), cfg.block_length * d, b.values.data.begin());
    b.utterance_id = f.utterance_id;
    b.start_frame = s;
    b.label = label;
    blocks.push_back(std::move(b));
  }
  return blocks;
}

}  // namespace lidtsm::blocking
