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

#include <ostream>

namespace purifuse {

/// Coordinate basis of a box: absolute pixels of a (width, height) frame,
/// or unitless [0,1] coordinates.
struct CoordSpace {
  enum class Kind { kAbsolute, kNormalized };

  Kind kind = Kind::kNormalized;
  double width = 0.0;
  double height = 0.0;

  static CoordSpace Normalized() { return {}; }
  /// Throws std::invalid_argument for nonpositive dimensions.
  static CoordSpace Absolute(double width, double height);

  bool is_normalized() const { return kind == Kind::kNormalized; }
  friend bool operator==(const CoordSpace&, const CoordSpace&) = default;
};

/// Axis-aligned rectangle in continuous coordinates. Zero-area boxes are
/// valid values; negative extents are not.
struct BBox {
  double x_min = 0.0;
  double y_min = 0.0;
  double x_max = 0.0;
  double y_max = 0.0;
  CoordSpace space;

  /// Validating constructor: rejects negative extents and non-finite
  /// coordinates with std::invalid_argument.
  static BBox Make(double x_min, double y_min, double x_max, double y_max,
                   CoordSpace space = CoordSpace::Normalized());
  /// From COCO's [x, y, width, height] in absolute pixels.
  static BBox FromXywh(double x, double y, double w, double h,
                       CoordSpace space);

  double width() const { return x_max - x_min; }
  double height() const { return y_max - y_min; }
  bool degenerate() const { return !(x_max > x_min && y_max > y_min); }

  friend bool operator==(const BBox&, const BBox&) = default;
};

std::ostream& operator<<(std::ostream& os, const BBox& b);

double area(const BBox& b);

/// Intersection over union. Zero when the union is empty. Throws
/// std::invalid_argument when the boxes live in different spaces.
double iou(const BBox& a, const BBox& b);

/// Intersection area divided by the area of `det` (COCO crowd overlap).
double intersection_over_first(const BBox& det, const BBox& region);

/// Clamps every coordinate of `b` into `bounds`. For overlapping boxes this
/// is the intersection; disjoint boxes collapse onto the nearest edge or
/// corner of `bounds`.
BBox clip(const BBox& b, const BBox& bounds);

/// Clips to the full frame of the box's own coordinate space.
BBox clip_to_frame(const BBox& b);

/// Re-expresses `b` in `target`. Absolute(w1,h1) -> Absolute(w2,h2) goes
/// through normalized coordinates.
BBox convert(const BBox& b, const CoordSpace& target);

BBox translate(const BBox& b, double dx, double dy);

}  // namespace purifuse
