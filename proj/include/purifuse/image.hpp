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

#include <cstddef>
#include <span>
#include <vector>

namespace purifuse {

/// Planar image with samples in [0,1]. Channel c occupies the contiguous
/// range [c*w*h, (c+1)*w*h), rows top to bottom.
class ImageBuffer {
 public:
  ImageBuffer() = default;
  /// Throws std::invalid_argument for zero dimensions or channels not in
  /// {1, 3}.
  ImageBuffer(int width, int height, int channels, double fill = 0.0);
  ImageBuffer(int width, int height, int channels, std::vector<double> data);

  int width() const { return width_; }
  int height() const { return height_; }
  int channels() const { return channels_; }
  std::size_t plane_size() const {
    return static_cast<std::size_t>(width_) * height_;
  }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& at(int c, int y, int x) {
    return data_[c * plane_size() + static_cast<std::size_t>(y) * width_ + x];
  }
  double at(int c, int y, int x) const {
    return data_[c * plane_size() + static_cast<std::size_t>(y) * width_ + x];
  }

  std::span<double> plane(int c) {
    return {data_.data() + c * plane_size(), plane_size()};
  }
  std::span<const double> plane(int c) const {
    return {data_.data() + c * plane_size(), plane_size()};
  }

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  /// Replaces non-finite samples with 0 and clamps to [0,1].
  void clamp();
  bool same_shape(const ImageBuffer& o) const {
    return width_ == o.width_ && height_ == o.height_ &&
           channels_ == o.channels_;
  }

  friend bool operator==(const ImageBuffer&, const ImageBuffer&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  int channels_ = 0;
  std::vector<double> data_;
};

/// Half-sample symmetric reflection ("cba|abc|cba") of an arbitrary index
/// into [0, n). Used as the boundary rule by every filter.
inline int reflect_index(int i, int n) {
  if (n == 1) return 0;
  const int period = 2 * n;
  int m = i % period;
  if (m < 0) m += period;
  return m < n ? m : period - 1 - m;
}

double max_abs_diff(const ImageBuffer& a, const ImageBuffer& b);
double mean_value(const ImageBuffer& img);

}  // namespace purifuse
