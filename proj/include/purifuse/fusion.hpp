// Copyright 2026 The Purifuse Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "purifuse/geometry.hpp"

namespace purifuse {

using ImageId = std::int64_t;

/// Source id carried by fused detections (they no longer belong to one set).
inline constexpr int kFusedSource = -1;

struct Detection {
  BBox box;  // normalized
  int class_id = 0;
  double confidence = 0.0;
  int source_id = 0;
};

struct DetectionSet {
  ImageId image_id = 0;
  std::vector<Detection> detections;
  double weight = 1.0;
};

enum class RescaleMode {
  kMinClusterOverModels,  // c * min(T, N) / N
  kClusterOverModels,     // c * T / N
  kNone,
};

/// Ordering among pooled detections of equal adjusted confidence.
enum class TieBreak {
  kSourceThenIndex,  // ascending (source_id, position within its set)
};

struct FusionConfig {
  double iou_threshold = 0.55;
  double skip_confidence = 0.0;
  RescaleMode rescale_mode = RescaleMode::kMinClusterOverModels;
  TieBreak tie_break = TieBreak::kSourceThenIndex;

  /// Throws std::invalid_argument when a field is out of range.
  void validate() const;
};

/// A pooled input detection that ended up in a cluster.
struct MemberRef {
  std::size_t set_index = 0;  // position of its set in the input list
  std::size_t det_index = 0;  // position within that set
  double adjusted_confidence = 0.0;
};

struct FusionResult {
  DetectionSet fused;
  /// clusters[i] lists the members behind fused.detections[i], in the order
  /// they were absorbed.
  std::vector<std::vector<MemberRef>> clusters;
};

/// Weighted Boxes Fusion over detection sets of one image. Boxes are clipped
/// to [0,1]; degenerate ones are skipped.
FusionResult wbf_detailed(const std::vector<DetectionSet>& sets,
                          const FusionConfig& cfg = {});

inline DetectionSet wbf(const std::vector<DetectionSet>& sets,
                        const FusionConfig& cfg = {}) {
  return wbf_detailed(sets, cfg).fused;
}

/// Greedy per-class non-maximum suppression; survivors sorted by confidence.
std::vector<Detection> nms(const std::vector<Detection>& dets,
                           double iou_threshold);

/// Per-variant ensemble weights proportional to a benchmark score (e.g. PSNR
/// of the denoiser), scaled to mean 1.
std::map<std::string, double> derive_weights(
    const std::map<std::string, double>& scores);

const char* to_string(RescaleMode mode);
RescaleMode rescale_mode_from_string(const std::string& name);

}  // namespace purifuse
