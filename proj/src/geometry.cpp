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

#include "purifuse/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace purifuse {

CoordSpace CoordSpace::Absolute(double width, double height) {
  if (!(width > 0.0) || !(height > 0.0) || !std::isfinite(width) ||
      !std::isfinite(height)) {
    throw std::invalid_argument("absolute coordinate space needs positive "
                                "finite dimensions");
  }
  return {Kind::kAbsolute, width, height};
}

BBox BBox::Make(double x_min, double y_min, double x_max, double y_max,
                CoordSpace space) {
  if (!std::isfinite(x_min) || !std::isfinite(y_min) ||
      !std::isfinite(x_max) || !std::isfinite(y_max)) {
    throw std::invalid_argument("box coordinates must be finite");
  }
  if (x_max < x_min || y_max < y_min) {
    throw std::invalid_argument("box has negative extent");
  }
  return {x_min, y_min, x_max, y_max, space};
}

BBox BBox::FromXywh(double x, double y, double w, double h,
                    CoordSpace space) {
  return Make(x, y, x + w, y + h, space);
}

std::ostream& operator<<(std::ostream& os, const BBox& b) {
  os << '(' << b.x_min << ", " << b.y_min << ", " << b.x_max << ", "
     << b.y_max << (b.space.is_normalized() ? ")n" : ")a");
  return os;
}

double area(const BBox& b) {
  return std::max(0.0, b.x_max - b.x_min) * std::max(0.0, b.y_max - b.y_min);
}

namespace {

void require_same_space(const BBox& a, const BBox& b) {
  if (!(a.space == b.space)) {
    throw std::invalid_argument("boxes are in different coordinate spaces");
  }
}

double intersection_area(const BBox& a, const BBox& b) {
  const double w =
      std::min(a.x_max, b.x_max) - std::max(a.x_min, b.x_min);
  const double h =
      std::min(a.y_max, b.y_max) - std::max(a.y_min, b.y_min);
  if (w <= 0.0 || h <= 0.0) return 0.0;
  return w * h;
}

}  // namespace

double iou(const BBox& a, const BBox& b) {
  require_same_space(a, b);
  const double inter = intersection_area(a, b);
  const double uni = area(a) + area(b) - inter;
  if (uni <= 0.0) return 0.0;
  return std::clamp(inter / uni, 0.0, 1.0);
}

double intersection_over_first(const BBox& det, const BBox& region) {
  require_same_space(det, region);
  const double a = area(det);
  if (a <= 0.0) return 0.0;
  return std::clamp(intersection_area(det, region) / a, 0.0, 1.0);
}

BBox clip(const BBox& b, const BBox& bounds) {
  require_same_space(b, bounds);
  BBox out = b;
  out.x_min = std::clamp(b.x_min, bounds.x_min, bounds.x_max);
  out.x_max = std::clamp(b.x_max, bounds.x_min, bounds.x_max);
  out.y_min = std::clamp(b.y_min, bounds.y_min, bounds.y_max);
  out.y_max = std::clamp(b.y_max, bounds.y_min, bounds.y_max);
  return out;
}

BBox clip_to_frame(const BBox& b) {
  const double w = b.space.is_normalized() ? 1.0 : b.space.width;
  const double h = b.space.is_normalized() ? 1.0 : b.space.height;
  return clip(b, BBox{0.0, 0.0, w, h, b.space});
}

BBox convert(const BBox& b, const CoordSpace& target) {
  if (b.space == target) return b;
  BBox n = b;
  if (!b.space.is_normalized()) {
    if (!(b.space.width > 0.0) || !(b.space.height > 0.0)) {
      throw std::invalid_argument("source space has nonpositive dimensions");
    }
    n.x_min = b.x_min / b.space.width;
    n.x_max = b.x_max / b.space.width;
    n.y_min = b.y_min / b.space.height;
    n.y_max = b.y_max / b.space.height;
  }
  n.space = target;
  if (target.is_normalized()) return n;
  if (!(target.width > 0.0) || !(target.height > 0.0)) {
    throw std::invalid_argument("target space has nonpositive dimensions");
  }
  n.x_min *= target.width;
  n.x_max *= target.width;
  n.y_min *= target.height;
  n.y_max *= target.height;
  return n;
}

BBox translate(const BBox& b, double dx, double dy) {
  BBox out = b;
  out.x_min += dx;
  out.x_max += dx;
  out.y_min += dy;
  out.y_max += dy;
  return out;
}

}  // namespace purifuse
