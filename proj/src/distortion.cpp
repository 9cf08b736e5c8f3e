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

#include "purifuse/distortion.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "purifuse/purifier.hpp"
#include "purifuse/rng.hpp"

namespace purifuse {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

constexpr std::uint64_t kNoiseDomain = 0xd1570f7dULL;

}  // namespace

Severity severity_from_string(const std::string& name) {
  if (name == "low") return Severity::kLow;
  if (name == "medium") return Severity::kMedium;
  if (name == "high") return Severity::kHigh;
  throw std::invalid_argument("unknown severity '" + name + "'");
}

const char* to_string(Severity s) {
  switch (s) {
    case Severity::kLow:
      return "low";
    case Severity::kMedium:
      return "medium";
    case Severity::kHigh:
      return "high";
  }
  return "?";
}

DistortionSpec DistortionSpec::Preset(int kind_index, Severity severity,
                                      std::uint64_t seed) {
  const int s = static_cast<int>(severity);
  static constexpr double kSigma[] = {0.02, 0.05, 0.1};
  static constexpr int kLength[] = {5, 9, 15};
  static constexpr int kFactor[] = {2, 2, 4};
  DistortionSpec spec;
  spec.seed = seed;
  switch (kind_index) {
    case 0:
      spec.kind = GaussianNoise{kSigma[s]};
      break;
    case 1:
      spec.kind = MotionBlur{kLength[s], 0.0};
      break;
    case 2:
      spec.kind = Downsample{kFactor[s]};
      break;
    default:
      throw std::invalid_argument("distortion kind index must be 0, 1 or 2");
  }
  return spec;
}

void DistortionSpec::validate() const {
  std::visit(Overloaded{
                 [](const GaussianNoise& g) {
                   if (!(g.sigma > 0.0)) {
                     throw std::invalid_argument("noise sigma must be > 0");
                   }
                 },
                 [](const MotionBlur& m) {
                   if (m.length < 1) {
                     throw std::invalid_argument("blur length must be >= 1");
                   }
                 },
                 [](const Downsample& d) {
                   if (d.factor != 2 && d.factor != 4) {
                     throw std::invalid_argument(
                         "downsample factor must be 2 or 4");
                   }
                 },
             },
             kind);
}

std::string DistortionSpec::label() const {
  std::ostringstream os;
  std::visit(Overloaded{
                 [&](const GaussianNoise& g) { os << "noise_s" << g.sigma; },
                 [&](const MotionBlur& m) {
                   os << "blur_l" << m.length << "_a" << m.angle;
                 },
                 [&](const Downsample& d) { os << "down_x" << d.factor; },
             },
             kind);
  return os.str();
}

ImageBuffer distort(const ImageBuffer& img, const DistortionSpec& spec,
                    std::uint64_t stream) {
  spec.validate();
  return std::visit(
      Overloaded{
          [&](const GaussianNoise& g) {
            CounterRng rng = CounterRng::ForStream(spec.seed, stream,
                                                   kNoiseDomain);
            ImageBuffer out = img;
            for (double& v : out.data()) v += g.sigma * rng.normal();
            out.clamp();
            return out;
          },
          [&](const MotionBlur& m) {
            return convolve(img, motion_psf(m.length, m.angle));
          },
          [&](const Downsample& d) {
            const ImageBuffer small = box_downsample(img, d.factor);
            ImageBuffer out(img.width(), img.height(), img.channels());
            for (int c = 0; c < img.channels(); ++c) {
              for (int y = 0; y < img.height(); ++y) {
                for (int x = 0; x < img.width(); ++x) {
                  out.at(c, y, x) = small.at(c, y / d.factor, x / d.factor);
                }
              }
            }
            return out;
          },
      },
      spec.kind);
}

OracleSpec OracleSpec::Perfect(std::uint64_t seed) {
  OracleSpec s;
  s.coordinate_jitter_sigma = 0.0;
  s.drop_probability = 0.0;
  s.base_confidence = 1.0;
  s.jitter_penalty = 0.0;
  s.confidence_noise = 0.0;
  s.false_positive_rate = 0.0;
  s.seed = seed;
  return s;
}

void OracleSpec::validate() const {
  if (!(coordinate_jitter_sigma >= 0.0) || !(confidence_noise >= 0.0) ||
      !(jitter_penalty >= 0.0)) {
    throw std::invalid_argument("oracle noise parameters must be >= 0");
  }
  if (!(drop_probability >= 0.0 && drop_probability <= 1.0)) {
    throw std::invalid_argument("oracle drop_probability must be in [0,1]");
  }
  if (!(base_confidence >= 0.0 && base_confidence <= 1.0)) {
    throw std::invalid_argument("oracle base_confidence must be in [0,1]");
  }
  if (!(false_positive_rate >= 0.0)) {
    throw std::invalid_argument("oracle false_positive_rate must be >= 0");
  }
  if (!(false_positive_max_confidence >= 0.0 &&
        false_positive_max_confidence <= 1.0)) {
    throw std::invalid_argument(
        "oracle false_positive_max_confidence must be in [0,1]");
  }
}

DetectionSet oracle_detect(const GroundTruthSet& gt, double variant_quality,
                           const OracleSpec& spec, int variant_id,
                           int num_classes) {
  spec.validate();
  const double q = std::clamp(variant_quality, 0.0, 1.0);
  const double s = 1.0 - q;
  const double d = spec.drop_probability;
  const double p_drop = d * (1.0 - q * (1.0 - d));
  const double sigma = spec.coordinate_jitter_sigma * s;
  CounterRng rng = CounterRng::ForStream(
      spec.seed, static_cast<std::uint64_t>(gt.image_id),
      static_cast<std::uint64_t>(variant_id));

  DetectionSet out;
  out.image_id = gt.image_id;
  out.weight = 1.0;
  for (const GroundTruthBox& g : gt.boxes) {
    if (g.iscrowd) continue;
    // Fixed number of draws per box keeps streams aligned across qualities.
    const double u_drop = rng.uniform();
    double z[5];
    for (double& v : z) v = rng.normal();
    if (u_drop < p_drop) continue;

    const BBox b = convert(g.box, CoordSpace::Normalized());
    const double bw = b.width();
    const double bh = b.height();
    double x0 = b.x_min + z[0] * sigma * bw;
    double y0 = b.y_min + z[1] * sigma * bh;
    double x1 = b.x_max + z[2] * sigma * bw;
    double y1 = b.y_max + z[3] * sigma * bh;
    if (x1 < x0) std::swap(x0, x1);
    if (y1 < y0) std::swap(y0, y1);
    const BBox jittered =
        clip_to_frame(BBox{x0, y0, x1, y1, CoordSpace::Normalized()});
    if (jittered.degenerate()) continue;

    const double rms =
        sigma * std::sqrt((z[0] * z[0] + z[1] * z[1] + z[2] * z[2] +
                           z[3] * z[3]) / 4.0);
    const double conf = spec.base_confidence + (1.0 - spec.base_confidence) * q -
                        spec.jitter_penalty * rms +
                        spec.confidence_noise * s * z[4];
    out.detections.push_back(Detection{jittered, g.class_id,
                                       std::clamp(conf, 0.0, 1.0),
                                       variant_id});
  }

  const int n_fp = rng.poisson(spec.false_positive_rate * s);
  for (int k = 0; k < n_fp && num_classes > 0; ++k) {
    const double w = rng.uniform(0.05, 0.3);
    const double h = rng.uniform(0.05, 0.3);
    const double cx = rng.uniform(w / 2, 1.0 - w / 2);
    const double cy = rng.uniform(h / 2, 1.0 - h / 2);
    const int cls = static_cast<int>(rng.below(num_classes));
    const double conf = spec.false_positive_max_confidence * rng.uniform();
    out.detections.push_back(
        Detection{BBox{cx - w / 2, cy - h / 2, cx + w / 2, cy + h / 2,
                       CoordSpace::Normalized()},
                  cls, conf, variant_id});
  }
  return out;
}

}  // namespace purifuse
