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
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "purifuse/image.hpp"
#include "purifuse/image_io.hpp"

namespace purifuse {

/// Blur kernel with odd dimensions, anchored at its center, summing to 1.
struct Psf {
  int width = 1;
  int height = 1;
  std::vector<double> weights{1.0};  // row-major

  static Psf Identity() { return {}; }
  /// Normalizes `weights` to sum 1. Throws std::invalid_argument for even
  /// dimensions, negative entries or a zero sum.
  static Psf FromKernel(int width, int height, std::vector<double> weights);

  int anchor_x() const { return width / 2; }
  int anchor_y() const { return height / 2; }
  double at(int y, int x) const { return weights[y * width + x]; }
  double sum() const;
  /// Point reflection through the anchor (the adjoint of the blur).
  Psf flipped() const;
};

/// Linear motion blur: `length` unit-spaced samples along a segment through
/// the origin at `angle_degrees` (counter-clockwise, image y pointing down),
/// each splatted with bilinear weights.
Psf motion_psf(int length, double angle_degrees);

/// True 2-D convolution with reflect boundaries, per channel.
ImageBuffer convolve(const ImageBuffer& img, const Psf& psf);

/// (2r+1)^2 neighborhood median per channel. radius in [1, min(w,h)].
ImageBuffer median_denoise(const ImageBuffer& img, int radius);

/// Normalized 1-D Gaussian taps over [-ceil(3 sigma), ceil(3 sigma)].
std::vector<double> gaussian_kernel_1d(double sigma);

/// Separable Gaussian smoothing. With symmetric reflection the image mean is
/// preserved.
ImageBuffer gaussian_denoise(const ImageBuffer& img, double sigma);

/// Frequency-domain Wiener deconvolution, conj(H) / (|H|^2 + noise_power),
/// on a reflect-padded window.
ImageBuffer wiener_deblur(const ImageBuffer& img, const Psf& psf,
                          double noise_power);

/// Multiplicative Richardson-Lucy deconvolution initialised with the
/// observation, both floored at kRichardsonLucyFloor.
ImageBuffer richardson_lucy(const ImageBuffer& img, const Psf& psf,
                            int iterations);
inline constexpr double kRichardsonLucyFloor = 1e-6;

enum class Interp { kNearest, kBilinear, kBicubic };

inline constexpr std::size_t kDefaultMaxPixels = std::size_t{1} << 26;

/// Integer-factor upscaling with pixel-center alignment; bicubic uses
/// Catmull-Rom weights. Throws std::invalid_argument for factors outside
/// {2,3,4} or when the result would exceed `max_pixels` samples.
ImageBuffer upscale(const ImageBuffer& img, int factor, Interp interp,
                    std::size_t max_pixels = kDefaultMaxPixels);

/// Box-average reduction by `factor`; edge blocks average what they cover.
ImageBuffer box_downsample(const ImageBuffer& img, int factor);

/// Resize to an exact size: box averaging when the size divides evenly,
/// bilinear otherwise.
ImageBuffer resize_to(const ImageBuffer& img, int width, int height);

// --- stages ----------------------------------------------------------------

enum class StageKind { kRealDenoise, kMotionDeblur, kUpscale, kExternal };

const char* to_string(StageKind kind);
/// Accepts "real_denoise" / "RD", "motion_deblur" / "MD", "upscale" / "RE",
/// "external".
StageKind stage_kind_from_string(const std::string& name);
/// Two-letter tag used in ordering labels (RD, MD, RE, EX).
const char* short_tag(StageKind kind);

struct MedianDenoise {
  int radius = 1;
};
struct GaussianDenoise {
  double sigma = 1.0;
};
struct WienerDeblur {
  Psf psf;
  double noise_power = 1e-3;
};
struct RichardsonLucy {
  Psf psf;
  int iterations = 10;
};
struct Upscale {
  int factor = 2;
  Interp interp = Interp::kBicubic;
  std::size_t max_pixels = kDefaultMaxPixels;
};
/// Hook for a neural model run as a subprocess. `command` may contain
/// {input} and {output}, replaced by shell-quoted temp file paths.
struct ExternalStage {
  StageKind role = StageKind::kExternal;
  std::string command;
  ImageFormat format = ImageFormat::kPng;
  std::chrono::milliseconds timeout{120'000};
  std::string metadata_json = "{}";  // opaque model settings
};

using StageMethod = std::variant<MedianDenoise, GaussianDenoise, WienerDeblur,
                                 RichardsonLucy, Upscale, ExternalStage>;

struct StageSpec {
  StageMethod method;

  /// Pipeline role; external stages report their declared role.
  StageKind kind() const;
  std::string label() const;
  /// Throws std::invalid_argument when parameters are out of range.
  void validate() const;
};

ImageBuffer apply_stage(const ImageBuffer& img, const StageSpec& stage);

/// Runs an external stage through the subprocess limiter. Throws
/// ExternalCommandError on nonzero exit, timeout or unreadable output.
ImageBuffer run_external_stage(const ImageBuffer& img,
                               const ExternalStage& spec);

struct PipelineOptions {
  /// When set, each stage output is written as stage_<i>_<label>.png.
  std::optional<std::filesystem::path> persist_dir;
};

/// Applies stages strictly in order, clamping after each. Failures are
/// rethrown as StageError carrying the 0-based stage index.
ImageBuffer run_pipeline(const ImageBuffer& img,
                         const std::vector<StageSpec>& stages,
                         const PipelineOptions& options = {});

// --- distribution metrics --------------------------------------------------

struct Histogram {
  std::array<std::uint64_t, 256> bins{};
  std::uint64_t total = 0;
};

inline int histogram_bin(double v) {
  const int b = static_cast<int>(v * 256.0);
  return b < 0 ? 0 : (b > 255 ? 255 : b);
}

Histogram histogram(const ImageBuffer& img, int channel);

struct ConcentrationMetrics {
  double shannon_entropy = 0.0;     // bits, pooled 256-bin histogram
  double histogram_variance = 0.0;  // variance of sample values
  double laplacian_variance = 0.0;  // variance of the 3x3 Laplacian
};

ConcentrationMetrics concentration_metrics(const ImageBuffer& img);

}  // namespace purifuse
