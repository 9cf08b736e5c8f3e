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

#include "purifuse/image.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace purifuse {

namespace {

void check_shape(int width, int height, int channels) {
  if (width <= 0 || height <= 0) {
    throw std::invalid_argument("image dimensions must be positive");
  }
  if (channels != 1 && channels != 3) {
    throw std::invalid_argument("image must have 1 or 3 channels");
  }
}

}  // namespace

ImageBuffer::ImageBuffer(int width, int height, int channels, double fill)
    : width_(width), height_(height), channels_(channels) {
  check_shape(width, height, channels);
  data_.assign(plane_size() * channels, fill);
}

ImageBuffer::ImageBuffer(int width, int height, int channels,
                         std::vector<double> data)
    : width_(width), height_(height), channels_(channels),
      data_(std::move(data)) {
  check_shape(width, height, channels);
  if (data_.size() != plane_size() * channels) {
    throw std::invalid_argument("pixel buffer size does not match shape");
  }
}

void ImageBuffer::clamp() {
  for (double& v : data_) {
    v = std::isfinite(v) ? std::clamp(v, 0.0, 1.0) : 0.0;
  }
}

double max_abs_diff(const ImageBuffer& a, const ImageBuffer& b) {
  if (!a.same_shape(b)) {
    throw std::invalid_argument("images differ in shape");
  }
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
  }
  return m;
}

double mean_value(const ImageBuffer& img) {
  if (img.empty()) return 0.0;
  double s = 0.0;
  for (double v : img.data()) s += v;
  return s / static_cast<double>(img.size());
}

}  // namespace purifuse
