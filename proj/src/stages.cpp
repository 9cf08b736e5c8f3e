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
#include <sstream>
#include <stdexcept>

#include "purifuse/error.hpp"
#include "purifuse/purifier.hpp"
#include "purifuse/subprocess.hpp"

namespace purifuse {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

const char* interp_name(Interp i) {
  switch (i) {
    case Interp::kNearest:
      return "nearest";
    case Interp::kBilinear:
      return "bilinear";
    case Interp::kBicubic:
      return "bicubic";
  }
  return "?";
}

void check_psf(const Psf& psf) {
  if (psf.width % 2 == 0 || psf.height % 2 == 0 ||
      psf.weights.size() != static_cast<std::size_t>(psf.width) * psf.height) {
    throw std::invalid_argument("malformed psf");
  }
  if (std::abs(psf.sum() - 1.0) > 1e-9) {
    throw std::invalid_argument("psf must sum to 1");
  }
}

}  // namespace

const char* to_string(StageKind kind) {
  switch (kind) {
    case StageKind::kRealDenoise:
      return "real_denoise";
    case StageKind::kMotionDeblur:
      return "motion_deblur";
    case StageKind::kUpscale:
      return "upscale";
    case StageKind::kExternal:
      return "external";
  }
  return "?";
}

const char* short_tag(StageKind kind) {
  switch (kind) {
    case StageKind::kRealDenoise:
      return "RD";
    case StageKind::kMotionDeblur:
      return "MD";
    case StageKind::kUpscale:
      return "RE";
    case StageKind::kExternal:
      return "EX";
  }
  return "?";
}

StageKind stage_kind_from_string(const std::string& name) {
  if (name == "real_denoise" || name == "RD") return StageKind::kRealDenoise;
  if (name == "motion_deblur" || name == "MD") return StageKind::kMotionDeblur;
  if (name == "upscale" || name == "RE") return StageKind::kUpscale;
  if (name == "external" || name == "EX") return StageKind::kExternal;
  throw std::invalid_argument("unknown stage kind '" + name + "'");
}

StageKind StageSpec::kind() const {
  return std::visit(
      Overloaded{
          [](const MedianDenoise&) { return StageKind::kRealDenoise; },
          [](const GaussianDenoise&) { return StageKind::kRealDenoise; },
          [](const WienerDeblur&) { return StageKind::kMotionDeblur; },
          [](const RichardsonLucy&) { return StageKind::kMotionDeblur; },
          [](const Upscale&) { return StageKind::kUpscale; },
          [](const ExternalStage& e) { return e.role; },
      },
      method);
}

std::string StageSpec::label() const {
  std::ostringstream os;
  std::visit(Overloaded{
                 [&](const MedianDenoise& m) { os << "median_r" << m.radius; },
                 [&](const GaussianDenoise& g) {
                   os << "gaussian_s" << g.sigma;
                 },
                 [&](const WienerDeblur& wd) {
                   os << "wiener_k" << wd.noise_power;
                 },
                 [&](const RichardsonLucy& rl) {
                   os << "rl_i" << rl.iterations;
                 },
                 [&](const Upscale& u) {
                   os << "upscale_x" << u.factor << '_' << interp_name(u.interp);
                 },
                 [&](const ExternalStage& e) {
                   os << "external_" << to_string(e.role);
                 },
             },
             method);
  return os.str();
}

void StageSpec::validate() const {
  std::visit(
      Overloaded{
          [](const MedianDenoise& m) {
            if (m.radius < 1) throw std::invalid_argument("median radius < 1");
          },
          [](const GaussianDenoise& g) {
            if (!(g.sigma > 0.0)) {
              throw std::invalid_argument("gaussian sigma must be > 0");
            }
          },
          [](const WienerDeblur& wd) {
            check_psf(wd.psf);
            if (!(wd.noise_power >= 0.0)) {
              throw std::invalid_argument("wiener noise_power must be >= 0");
            }
          },
          [](const RichardsonLucy& rl) {
            check_psf(rl.psf);
            if (rl.iterations < 1) {
              throw std::invalid_argument("richardson-lucy iterations < 1");
            }
          },
          [](const Upscale& u) {
            if (u.factor < 2 || u.factor > 4) {
              throw std::invalid_argument("upscale factor must be 2, 3 or 4");
            }
          },
          [](const ExternalStage& e) {
            if (e.command.empty()) {
              throw std::invalid_argument("external stage has no command");
            }
            if (e.timeout.count() <= 0) {
              throw std::invalid_argument("external timeout must be > 0");
            }
          },
      },
      method);
}

ImageBuffer apply_stage(const ImageBuffer& img, const StageSpec& stage) {
  stage.validate();
  ImageBuffer out = std::visit(
      Overloaded{
          [&](const MedianDenoise& m) { return median_denoise(img, m.radius); },
          [&](const GaussianDenoise& g) {
            return gaussian_denoise(img, g.sigma);
          },
          [&](const WienerDeblur& wd) {
            return wiener_deblur(img, wd.psf, wd.noise_power);
          },
          [&](const RichardsonLucy& rl) {
            return richardson_lucy(img, rl.psf, rl.iterations);
          },
          [&](const Upscale& u) {
            return upscale(img, u.factor, u.interp, u.max_pixels);
          },
          [&](const ExternalStage& e) { return run_external_stage(img, e); },
      },
      stage.method);
  out.clamp();
  return out;
}

ImageBuffer run_external_stage(const ImageBuffer& img,
                               const ExternalStage& spec) {
  if (spec.command.empty()) {
    throw ExternalCommandError("external stage has no command template");
  }
  TempDir dir;
  const char* ext = spec.format == ImageFormat::kPng ? ".png" : ".ppm";
  const auto input = dir.path() / (std::string("input") + ext);
  const auto output = dir.path() / (std::string("output") + ext);
  write_image(input, img);
  const std::string cmd = substitute_placeholders(
      spec.command, {{"input", input.string()}, {"output", output.string()}});
  const int status = run_shell_command(cmd, spec.timeout);
  if (status != 0) {
    throw ExternalCommandError("external command exited with status " +
                               std::to_string(status) + ": " + cmd);
  }
  if (!std::filesystem::exists(output)) {
    throw ExternalCommandError("external command produced no output image");
  }
  try {
    ImageBuffer out = read_image(output);
    out.clamp();
    return out;
  } catch (const DataError& e) {
    throw ExternalCommandError(std::string("malformed output image: ") +
                               e.what());
  } catch (const std::invalid_argument& e) {
    throw ExternalCommandError(std::string("malformed output image: ") +
                               e.what());
  }
}

ImageBuffer run_pipeline(const ImageBuffer& img,
                         const std::vector<StageSpec>& stages,
                         const PipelineOptions& options) {
  if (stages.empty()) {
    throw std::invalid_argument("pipeline needs at least one stage");
  }
  if (options.persist_dir) {
    std::filesystem::create_directories(*options.persist_dir);
  }
  ImageBuffer current = img;
  for (std::size_t i = 0; i < stages.size(); ++i) {
    try {
      current = apply_stage(current, stages[i]);
      if (options.persist_dir) {
        write_image(*options.persist_dir / ("stage_" + std::to_string(i) +
                                            "_" + stages[i].label() + ".png"),
                    current);
      }
    } catch (const ExternalCommandError& e) {
      throw StageError(i, e.what(), true);
    } catch (const std::exception& e) {
      throw StageError(i, e.what());
    }
  }
  return current;
}

Histogram histogram(const ImageBuffer& img, int channel) {
  if (channel < 0 || channel >= img.channels()) {
    throw std::invalid_argument("histogram channel out of range");
  }
  Histogram h;
  for (double v : img.plane(channel)) ++h.bins[histogram_bin(v)];
  h.total = img.plane_size();
  return h;
}

ConcentrationMetrics concentration_metrics(const ImageBuffer& img) {
  ConcentrationMetrics m;
  if (img.empty()) return m;
  std::array<std::uint64_t, 256> bins{};
  double sum = 0.0, sum2 = 0.0;
  for (double v : img.data()) {
    ++bins[histogram_bin(v)];
    sum += v;
  }
  const double n = static_cast<double>(img.size());
  const double mean = sum / n;
  for (double v : img.data()) sum2 += (v - mean) * (v - mean);
  m.histogram_variance = sum2 / n;
  for (std::uint64_t b : bins) {
    if (b == 0) continue;
    const double p = static_cast<double>(b) / n;
    m.shannon_entropy -= p * std::log2(p);
  }
  // Entropy of a single occupied bin is exactly zero; avoid printing -0.
  m.shannon_entropy = std::max(0.0, m.shannon_entropy);

  const int w = img.width();
  const int h = img.height();
  std::vector<double> lap;
  lap.reserve(img.size());
  for (int c = 0; c < img.channels(); ++c) {
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        lap.push_back(img.at(c, reflect_index(y - 1, h), x) +
                      img.at(c, reflect_index(y + 1, h), x) +
                      img.at(c, y, reflect_index(x - 1, w)) +
                      img.at(c, y, reflect_index(x + 1, w)) -
                      4.0 * img.at(c, y, x));
      }
    }
  }
  double lsum = 0.0;
  for (double v : lap) lsum += v;
  const double lmean = lsum / static_cast<double>(lap.size());
  double lvar = 0.0;
  for (double v : lap) lvar += (v - lmean) * (v - lmean);
  m.laplacian_variance = lvar / static_cast<double>(lap.size());
  return m;
}

}  // namespace purifuse
