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

#include <array>
#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "purifuse/fusion.hpp"
#include "purifuse/geometry.hpp"
#include "purifuse/image.hpp"

namespace purifuse {

struct GroundTruthBox {
  BBox box;  // normalized
  int class_id = 0;
  bool iscrowd = false;
};

struct GroundTruthSet {
  ImageId image_id = 0;
  std::vector<GroundTruthBox> boxes;
};

enum class MatchLabel { kTruePositive, kFalsePositive, kIgnored };

/// Greedy COCO matching. `dets` must already be in descending confidence
/// order; labels are returned in that order. A detection takes the unmatched
/// non-crowd ground truth of its class with the highest IoU >= threshold;
/// failing that, a crowd region it overlaps (intersection over detection
/// area >= threshold) marks it ignored.
std::vector<MatchLabel> match_detections(std::span<const Detection> dets,
                                         const GroundTruthSet& gt,
                                         double iou_threshold);

struct ScoredLabel {
  double confidence = 0.0;
  MatchLabel label = MatchLabel::kFalsePositive;
};

inline constexpr std::size_t kRecallPoints = 101;

struct PRCurve {
  std::vector<double> confidence;  // descending
  std::vector<double> precision;
  std::vector<double> recall;      // nondecreasing
  std::array<double, kRecallPoints> interpolated{};  // at r = 0.00..1.00
};

/// Cumulative precision/recall over detections sorted by confidence
/// (stable), ignored detections skipped.
PRCurve pr_curve(std::span<const ScoredLabel> labels, std::size_t gt_count);

/// 101-point interpolated AP. nullopt when there is neither ground truth nor
/// a detection (the class drops out of means); 0 when only detections exist.
std::optional<double> average_precision(std::span<const ScoredLabel> labels,
                                        std::size_t gt_count);

/// Thresholds 0.50, 0.55, ..., 0.95.
std::vector<double> coco_iou_thresholds();

struct EvalConfig {
  std::vector<double> iou_thresholds = coco_iou_thresholds();
  std::size_t max_detections = 100;  // per image and class
  /// Size of the category table; 0 infers it from the data.
  int num_classes = 0;
};

struct ClassMetrics {
  std::optional<double> ap50;
  std::optional<double> ap5095;
  std::size_t gt_count = 0;
};

struct EvalResult {
  double precision = 0.0;
  double recall = 0.0;
  double map50 = 0.0;
  double map5095 = 0.0;
  /// Confidence threshold of the reported precision/recall (max F1 at IoU
  /// 0.5); 0 when nothing was detected.
  double operating_confidence = 0.0;
  std::map<int, ClassMetrics> per_class;
  /// IoU-0.5 curves for every class with ground truth or detections.
  std::map<int, PRCurve> curves50;
};

/// COCO-style evaluation. Throws DataError for detections on images absent
/// from `gts` or with class ids outside the category table.
EvalResult evaluate(const std::vector<DetectionSet>& dets,
                    const std::vector<GroundTruthSet>& gts,
                    const EvalConfig& cfg = {});

inline constexpr double kPsnrCap = 99.0;

/// 10 log10(1 / MSE) for unit-range images, capped at kPsnrCap. Throws
/// std::invalid_argument on shape mismatch.
double psnr(const ImageBuffer& a, const ImageBuffer& b);

}  // namespace purifuse
