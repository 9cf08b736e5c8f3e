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

#include <filesystem>
#include <string>
#include <vector>

#include "purifuse/coco.hpp"
#include "purifuse/evaluator.hpp"
#include "purifuse/fusion.hpp"
#include "purifuse/image.hpp"
#include "purifuse/orchestrator.hpp"

namespace purifuse {

struct Rgb {
  double r = 0.0;
  double g = 0.0;
  double b = 0.0;
  friend bool operator==(const Rgb&, const Rgb&) = default;
};

/// Fixed color per class id, independent of run and platform.
Rgb class_color(int class_id);

/// Rectangle outline in pixel coordinates on a 3-channel image; clipped.
void draw_rect(ImageBuffer& rgb, int x0, int y0, int x1, int y1, Rgb color);

/// 5x7 bitmap text with its top-left corner at (x, y). Letters render in
/// upper case; characters outside [0-9A-Z .:_-] render as '?'.
void draw_text(ImageBuffer& rgb, int x, int y, const std::string& text,
               Rgb color, int scale = 1);

/// Ground truth in white, detections in their class color with
/// "<class> <confidence>" labels (two decimals). Gray inputs become RGB.
ImageBuffer draw_overlay(const ImageBuffer& img, const GroundTruthSet& gt,
                         const DetectionSet& dets,
                         const std::vector<std::string>& class_names,
                         double min_confidence = 0.0);

/// One <image id>.png per image that has detections or ground truth.
/// Throws DataError on I/O failures.
std::vector<std::filesystem::path> render_overlays(
    const CocoDataset& ds, const ImageLoader& load,
    const std::vector<DetectionSet>& dets, const std::filesystem::path& out_dir,
    double min_confidence = 0.0);

}  // namespace purifuse
