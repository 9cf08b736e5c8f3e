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

#include <cstdint>
#include <string>
#include <variant>

#include "purifuse/evaluator.hpp"
#include "purifuse/fusion.hpp"
#include "purifuse/image.hpp"

namespace purifuse {

struct GaussianNoise {
  double sigma = 0.05;
};
struct MotionBlur {
  int length = 9;
  double angle = 0.0;
};
struct Downsample {
  int factor = 2;
};

using DistortionKind = std::variant<GaussianNoise, MotionBlur, Downsample>;

enum class Severity { kLow, kMedium, kHigh };

Severity severity_from_string(const std::string& name);
const char* to_string(Severity s);

struct DistortionSpec {
  DistortionKind kind = GaussianNoise{};
  std::uint64_t seed = 0;

  /// Documented presets: noise sigma {0.02, 0.05, 0.1}, blur length
  /// {5, 9, 15} px, downsample factor {2, 2, 4} for low/medium/high.
  /// `kind_index` selects 0 = noise, 1 = blur, 2 = downsample.
  static DistortionSpec Preset(int kind_index, Severity severity,
                               std::uint64_t seed = 0);

  /// Throws std::invalid_argument for sigma <= 0, length < 1 or factors
  /// other than 2 and 4.
  void validate() const;
  std::string label() const;
};

/// Applies one distortion; noise draws come from the (seed, stream) stream
/// so separate images get independent but reproducible noise.
ImageBuffer distort(const ImageBuffer& img, const DistortionSpec& spec,
                    std::uint64_t stream = 0);

/// Synthetic detector standing in for a trained network. Quality q in [0,1]
/// scales every error source by (1 - q):
///   drop probability   d * (1 - q (1 - d))
///   corner jitter      N(0, (jitter * (1 - q) * box side)^2) per coordinate
///   confidence         base + (1 - base) q - penalty * rms_jitter
///                      + noise * (1 - q) * N(0, 1), clamped to [0, 1]
///   false positives    Poisson(rate * (1 - q)) boxes per image with random
///                      class, size in [0.05, 0.3], confidence U(0, fp_max)
struct OracleSpec {
  double coordinate_jitter_sigma = 0.25;
  double drop_probability = 0.3;
  double base_confidence = 0.6;
  double jitter_penalty = 2.0;
  double confidence_noise = 0.2;
  double false_positive_rate = 3.0;
  double false_positive_max_confidence = 0.6;
  std::uint64_t seed = 0;

  /// An oracle that reproduces ground truth exactly.
  static OracleSpec Perfect(std::uint64_t seed = 0);

  void validate() const;
};

/// Deterministic in (spec.seed, gt.image_id, variant_id). Crowd regions are
/// never emitted. Detections carry source_id = variant_id.
DetectionSet oracle_detect(const GroundTruthSet& gt, double variant_quality,
                           const OracleSpec& spec, int variant_id,
                           int num_classes);

}  // namespace purifuse
