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

#include <array>
#include <cmath>
#include <stdexcept>

#include "purifuse/purifier.hpp"

namespace purifuse {

namespace {

struct Taps {
  std::array<int, 4> index{};
  std::array<double, 4> weight{};
  int count = 0;
};

// Source taps for one output coordinate along an axis of length n.
Taps axis_taps(int out_pos, double scale, int n, Interp interp) {
  Taps t;
  const double src = (out_pos + 0.5) / scale - 0.5;
  switch (interp) {
    case Interp::kNearest: {
      t.index[0] = std::min(n - 1, static_cast<int>((out_pos + 0.5) / scale));
      t.weight[0] = 1.0;
      t.count = 1;
      break;
    }
    case Interp::kBilinear: {
      const int x0 = static_cast<int>(std::floor(src));
      const double f = src - x0;
      t.index = {reflect_index(x0, n), reflect_index(x0 + 1, n), 0, 0};
      t.weight = {1.0 - f, f, 0.0, 0.0};
      t.count = 2;
      break;
    }
    case Interp::kBicubic: {
      const int x0 = static_cast<int>(std::floor(src));
      const double f = src - x0;
      const double f2 = f * f;
      const double f3 = f2 * f;
      // Catmull-Rom (a = -0.5)
      t.weight = {0.5 * (-f3 + 2 * f2 - f), 0.5 * (3 * f3 - 5 * f2 + 2),
                  0.5 * (-3 * f3 + 4 * f2 + f), 0.5 * (f3 - f2)};
      for (int k = 0; k < 4; ++k) t.index[k] = reflect_index(x0 - 1 + k, n);
      t.count = 4;
      break;
    }
  }
  return t;
}

ImageBuffer separable_resize(const ImageBuffer& img, int out_w, int out_h,
                             double scale_x, double scale_y, Interp interp) {
  const int w = img.width();
  const int h = img.height();
  std::vector<Taps> xt(out_w), yt(out_h);
  for (int x = 0; x < out_w; ++x) xt[x] = axis_taps(x, scale_x, w, interp);
  for (int y = 0; y < out_h; ++y) yt[y] = axis_taps(y, scale_y, h, interp);

  ImageBuffer rows(out_w, h, img.channels());
  ImageBuffer out(out_w, out_h, img.channels());
  for (int c = 0; c < img.channels(); ++c) {
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < out_w; ++x) {
        double acc = 0.0;
        for (int k = 0; k < xt[x].count; ++k) {
          acc += xt[x].weight[k] * img.at(c, y, xt[x].index[k]);
        }
        rows.at(c, y, x) = acc;
      }
    }
    for (int y = 0; y < out_h; ++y) {
      for (int x = 0; x < out_w; ++x) {
        double acc = 0.0;
        for (int k = 0; k < yt[y].count; ++k) {
          acc += yt[y].weight[k] * rows.at(c, yt[y].index[k], x);
        }
        out.at(c, y, x) = acc;
      }
    }
  }
  out.clamp();
  return out;
}

}  // namespace

ImageBuffer upscale(const ImageBuffer& img, int factor, Interp interp,
                    std::size_t max_pixels) {
  if (factor < 2 || factor > 4) {
    throw std::invalid_argument("upscale factor must be 2, 3 or 4");
  }
  const std::size_t total = static_cast<std::size_t>(img.width()) * factor *
                            img.height() * factor * img.channels();
  if (total > max_pixels) {
    throw std::invalid_argument("upscaled image exceeds the sample limit");
  }
  if (interp == Interp::kNearest) {
    const int ow = img.width() * factor;
    const int oh = img.height() * factor;
    ImageBuffer out(ow, oh, img.channels());
    for (int c = 0; c < img.channels(); ++c) {
      for (int y = 0; y < oh; ++y) {
        for (int x = 0; x < ow; ++x) {
          out.at(c, y, x) = img.at(c, y / factor, x / factor);
        }
      }
    }
    return out;
  }
  return separable_resize(img, img.width() * factor, img.height() * factor,
                          factor, factor, interp);
}

ImageBuffer box_downsample(const ImageBuffer& img, int factor) {
  if (factor < 1) throw std::invalid_argument("downsample factor must be >= 1");
  const int ow = (img.width() + factor - 1) / factor;
  const int oh = (img.height() + factor - 1) / factor;
  ImageBuffer out(ow, oh, img.channels());
  for (int c = 0; c < img.channels(); ++c) {
    for (int y = 0; y < oh; ++y) {
      for (int x = 0; x < ow; ++x) {
        double acc = 0.0;
        int n = 0;
        for (int yy = y * factor; yy < std::min(img.height(), (y + 1) * factor);
             ++yy) {
          for (int xx = x * factor;
               xx < std::min(img.width(), (x + 1) * factor); ++xx) {
            acc += img.at(c, yy, xx);
            ++n;
          }
        }
        out.at(c, y, x) = acc / n;
      }
    }
  }
  return out;
}

ImageBuffer resize_to(const ImageBuffer& img, int width, int height) {
  if (width <= 0 || height <= 0) {
    throw std::invalid_argument("resize target must be positive");
  }
  if (width == img.width() && height == img.height()) return img;
  if (img.width() % width == 0 && img.height() % height == 0 &&
      img.width() / width == img.height() / height) {
    return box_downsample(img, img.width() / width);
  }
  return separable_resize(img, width, height,
                          static_cast<double>(width) / img.width(),
                          static_cast<double>(height) / img.height(),
                          Interp::kBilinear);
}

}  // namespace purifuse
