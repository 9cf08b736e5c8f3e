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

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <mutex>
#include <stdexcept>

#include "purifuse/purifier.hpp"

namespace purifuse {

namespace {

// FFTW's planner is not thread-safe; execution of distinct plans is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

struct FftwBuffer {
  explicit FftwBuffer(std::size_t n)
      : data(static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * n))),
        size(n) {
    if (!data) throw std::bad_alloc();
  }
  ~FftwBuffer() { fftw_free(data); }
  FftwBuffer(const FftwBuffer&) = delete;
  FftwBuffer& operator=(const FftwBuffer&) = delete;

  std::complex<double>* begin() {
    return reinterpret_cast<std::complex<double>*>(data);
  }
  std::complex<double>& operator[](std::size_t i) { return begin()[i]; }

  fftw_complex* data;
  std::size_t size;
};

class Fft2d {
 public:
  Fft2d(int rows, int cols, FftwBuffer& buf) {
    std::lock_guard lock(planner_mutex());
    forward_ = fftw_plan_dft_2d(rows, cols, buf.data, buf.data, FFTW_FORWARD,
                                FFTW_ESTIMATE);
    backward_ = fftw_plan_dft_2d(rows, cols, buf.data, buf.data,
                                 FFTW_BACKWARD, FFTW_ESTIMATE);
  }
  ~Fft2d() {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(forward_);
    fftw_destroy_plan(backward_);
  }
  Fft2d(const Fft2d&) = delete;
  Fft2d& operator=(const Fft2d&) = delete;

  void forward() { fftw_execute(forward_); }
  void backward() { fftw_execute(backward_); }

 private:
  fftw_plan forward_ = nullptr;
  fftw_plan backward_ = nullptr;
};

}  // namespace

ImageBuffer wiener_deblur(const ImageBuffer& img, const Psf& psf,
                          double noise_power) {
  if (!(noise_power >= 0.0)) {
    throw std::invalid_argument("wiener noise_power must be >= 0");
  }
  if (psf.width > img.width() || psf.height > img.height()) {
    throw std::invalid_argument("psf is larger than the image");
  }
  const int w = img.width();
  const int h = img.height();
  // Half-image reflect margins make the periodic extension continuous
  // (window spans one full mirrored period), and still cover the PSF.
  const int mx = std::max(psf.width, w / 2);
  const int my = std::max(psf.height, h / 2);
  const int pw = mx + w + std::max(psf.width, w - w / 2);
  const int ph = my + h + std::max(psf.height, h - h / 2);
  const std::size_t n = static_cast<std::size_t>(pw) * ph;

  FftwBuffer kernel(n);
  FftwBuffer work(n);
  Fft2d kernel_fft(ph, pw, kernel);
  Fft2d work_fft(ph, pw, work);

  std::fill(kernel.begin(), kernel.begin() + n, std::complex<double>{});
  for (int v = 0; v < psf.height; ++v) {
    for (int u = 0; u < psf.width; ++u) {
      const int yy = ((v - psf.anchor_y()) % ph + ph) % ph;
      const int xx = ((u - psf.anchor_x()) % pw + pw) % pw;
      kernel[static_cast<std::size_t>(yy) * pw + xx] += psf.at(v, u);
    }
  }
  kernel_fft.forward();

  std::vector<std::complex<double>> filter(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::complex<double> hf = kernel[i];
    const double mag2 = std::norm(hf);
    const double denom = mag2 + noise_power;
    filter[i] = denom > 1e-15 ? std::conj(hf) / denom : 0.0;
  }

  ImageBuffer out(w, h, img.channels());
  const double scale = 1.0 / static_cast<double>(n);
  for (int c = 0; c < img.channels(); ++c) {
    for (int y = 0; y < ph; ++y) {
      const int sy = reflect_index(y - my, h);
      for (int x = 0; x < pw; ++x) {
        work[static_cast<std::size_t>(y) * pw + x] =
            img.at(c, sy, reflect_index(x - mx, w));
      }
    }
    work_fft.forward();
    for (std::size_t i = 0; i < n; ++i) work[i] *= filter[i];
    work_fft.backward();
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        out.at(c, y, x) =
            work[static_cast<std::size_t>(y + my) * pw + (x + mx)].real() *
            scale;
      }
    }
  }
  out.clamp();
  return out;
}

namespace {

// Convolution without the final clamp; RL ratios may exceed 1.
void convolve_plane(std::span<const double> in, std::span<double> out,
                    int w, int h, const Psf& psf) {
  const int ax = psf.anchor_x();
  const int ay = psf.anchor_y();
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int v = 0; v < psf.height; ++v) {
        const int sy = reflect_index(y - (v - ay), h);
        for (int u = 0; u < psf.width; ++u) {
          const double k = psf.at(v, u);
          if (k == 0.0) continue;
          acc += k * in[static_cast<std::size_t>(sy) * w +
                        reflect_index(x - (u - ax), w)];
        }
      }
      out[static_cast<std::size_t>(y) * w + x] = acc;
    }
  }
}

}  // namespace

ImageBuffer richardson_lucy(const ImageBuffer& img, const Psf& psf,
                            int iterations) {
  if (iterations < 1) {
    throw std::invalid_argument("richardson-lucy needs >= 1 iteration");
  }
  const int w = img.width();
  const int h = img.height();
  const Psf adjoint = psf.flipped();
  const std::size_t plane = img.plane_size();
  ImageBuffer out(w, h, img.channels());
  std::vector<double> observed(plane), estimate(plane), blurred(plane),
      ratio(plane), correction(plane);
  for (int c = 0; c < img.channels(); ++c) {
    const auto src = img.plane(c);
    for (std::size_t i = 0; i < plane; ++i) {
      observed[i] = std::max(src[i], kRichardsonLucyFloor);
    }
    estimate = observed;
    for (int it = 0; it < iterations; ++it) {
      convolve_plane(estimate, blurred, w, h, psf);
      for (std::size_t i = 0; i < plane; ++i) {
        ratio[i] = observed[i] / std::max(blurred[i], kRichardsonLucyFloor);
      }
      convolve_plane(ratio, correction, w, h, adjoint);
      for (std::size_t i = 0; i < plane; ++i) estimate[i] *= correction[i];
    }
    std::copy(estimate.begin(), estimate.end(), out.plane(c).begin());
  }
  out.clamp();
  return out;
}

}  // namespace purifuse
