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

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>

#include "purifuse/purifier.hpp"

namespace purifuse {

Psf Psf::FromKernel(int width, int height, std::vector<double> weights) {
  if (width <= 0 || height <= 0 || width % 2 == 0 || height % 2 == 0) {
    throw std::invalid_argument("psf dimensions must be odd and positive");
  }
  if (weights.size() != static_cast<std::size_t>(width) * height) {
    throw std::invalid_argument("psf weight count does not match shape");
  }
  double s = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) {
      throw std::invalid_argument("psf weights must be finite and >= 0");
    }
    s += w;
  }
  if (!(s > 0.0)) throw std::invalid_argument("psf weights sum to zero");
  // Already-normalized kernels are kept bit-exact so they serialize stably.
  if (std::abs(s - 1.0) > 1e-12) {
    for (double& w : weights) w /= s;
  }
  Psf p;
  p.width = width;
  p.height = height;
  p.weights = std::move(weights);
  return p;
}

double Psf::sum() const {
  return std::accumulate(weights.begin(), weights.end(), 0.0);
}

Psf Psf::flipped() const {
  Psf p = *this;
  std::reverse(p.weights.begin(), p.weights.end());
  return p;
}

Psf motion_psf(int length, double angle_degrees) {
  if (length < 1) throw std::invalid_argument("motion length must be >= 1");
  const double theta = angle_degrees * std::numbers::pi / 180.0;
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  auto snap = [](double v) {
    const double r = std::round(v);
    return std::abs(v - r) < 1e-9 ? r : v;
  };

  std::vector<std::pair<double, double>> pts;
  pts.reserve(length);
  double reach_x = 0.0, reach_y = 0.0;
  for (int j = 0; j < length; ++j) {
    const double t = j - (length - 1) / 2.0;
    const double x = snap(t * c);
    const double y = snap(-t * s);
    pts.emplace_back(x, y);
    reach_x = std::max(reach_x, std::abs(x));
    reach_y = std::max(reach_y, std::abs(y));
  }
  const int hx = static_cast<int>(std::ceil(reach_x));
  const int hy = static_cast<int>(std::ceil(reach_y));
  const int w = 2 * hx + 1;
  const int h = 2 * hy + 1;
  std::vector<double> k(static_cast<std::size_t>(w) * h, 0.0);
  const double mass = 1.0 / length;
  for (const auto& [x, y] : pts) {
    const double gx = x + hx;
    const double gy = y + hy;
    const int x0 = static_cast<int>(std::floor(gx));
    const int y0 = static_cast<int>(std::floor(gy));
    const double fx = gx - x0;
    const double fy = gy - y0;
    auto deposit = [&](int yy, int xx, double wgt) {
      if (wgt <= 0.0) return;
      k[static_cast<std::size_t>(yy) * w + xx] += mass * wgt;
    };
    deposit(y0, x0, (1 - fx) * (1 - fy));
    if (fx > 0) deposit(y0, x0 + 1, fx * (1 - fy));
    if (fy > 0) deposit(y0 + 1, x0, (1 - fx) * fy);
    if (fx > 0 && fy > 0) deposit(y0 + 1, x0 + 1, fx * fy);
  }
  return Psf::FromKernel(w, h, std::move(k));
}

ImageBuffer convolve(const ImageBuffer& img, const Psf& psf) {
  const int w = img.width();
  const int h = img.height();
  const int ax = psf.anchor_x();
  const int ay = psf.anchor_y();
  ImageBuffer out(w, h, img.channels());
  for (int c = 0; c < img.channels(); ++c) {
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        double acc = 0.0;
        for (int v = 0; v < psf.height; ++v) {
          const int sy = reflect_index(y - (v - ay), h);
          for (int u = 0; u < psf.width; ++u) {
            const double k = psf.at(v, u);
            if (k == 0.0) continue;
            acc += k * img.at(c, sy, reflect_index(x - (u - ax), w));
          }
        }
        out.at(c, y, x) = acc;
      }
    }
  }
  out.clamp();
  return out;
}

ImageBuffer median_denoise(const ImageBuffer& img, int radius) {
  if (radius < 1) throw std::invalid_argument("median radius must be >= 1");
  if (radius > std::min(img.width(), img.height())) {
    throw std::invalid_argument("median radius exceeds image size");
  }
  const int w = img.width();
  const int h = img.height();
  const int side = 2 * radius + 1;
  std::vector<double> window(static_cast<std::size_t>(side) * side);
  const auto mid = window.begin() + (window.size() / 2);
  ImageBuffer out(w, h, img.channels());
  for (int c = 0; c < img.channels(); ++c) {
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        std::size_t n = 0;
        for (int dy = -radius; dy <= radius; ++dy) {
          const int sy = reflect_index(y + dy, h);
          for (int dx = -radius; dx <= radius; ++dx) {
            window[n++] = img.at(c, sy, reflect_index(x + dx, w));
          }
        }
        std::nth_element(window.begin(), mid, window.end());
        out.at(c, y, x) = *mid;
      }
    }
  }
  return out;
}

std::vector<double> gaussian_kernel_1d(double sigma) {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) {
    throw std::invalid_argument("gaussian sigma must be > 0");
  }
  const int r = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> k(2 * r + 1);
  double s = 0.0;
  for (int i = -r; i <= r; ++i) {
    k[i + r] = std::exp(-0.5 * (i * i) / (sigma * sigma));
    s += k[i + r];
  }
  for (double& v : k) v /= s;
  return k;
}

ImageBuffer gaussian_denoise(const ImageBuffer& img, double sigma) {
  const std::vector<double> k = gaussian_kernel_1d(sigma);
  const int r = static_cast<int>(k.size() / 2);
  const int w = img.width();
  const int h = img.height();
  ImageBuffer tmp(w, h, img.channels());
  ImageBuffer out(w, h, img.channels());
  for (int c = 0; c < img.channels(); ++c) {
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        double acc = 0.0;
        for (int i = -r; i <= r; ++i) {
          acc += k[i + r] * img.at(c, y, reflect_index(x + i, w));
        }
        tmp.at(c, y, x) = acc;
      }
    }
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        double acc = 0.0;
        for (int i = -r; i <= r; ++i) {
          acc += k[i + r] * tmp.at(c, reflect_index(y + i, h), x);
        }
        out.at(c, y, x) = acc;
      }
    }
  }
  out.clamp();
  return out;
}

}  // namespace purifuse
