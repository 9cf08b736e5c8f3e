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
#include <filesystem>
#include <vector>

#include "purifuse/coco.hpp"
#include "purifuse/distortion.hpp"
#include "purifuse/image.hpp"
#include "purifuse/orchestrator.hpp"

namespace purifuse {

/// Deterministic card with a gradient, flat patches, a disk, stripes and a
/// checkerboard: enough edges for deblurring and histogram checks.
ImageBuffer make_test_card(int width, int height, int channels = 1);

struct SyntheticOptions {
  int num_images = 20;
  int width = 64;
  int height = 64;
  int channels = 1;
  int num_classes = 3;
  int max_objects = 4;
  std::uint64_t seed = 0;
  bool distort = true;
  Severity severity = Severity::kMedium;
};

/// Rectangles with class-specific intensity on a random gradient. Each
/// distorted image gets one distortion type drawn uniformly from noise,
/// blur and downsampling.
struct SyntheticDataset {
  CocoDataset dataset;
  std::vector<ImageBuffer> clean;
  std::vector<ImageBuffer> distorted;
  std::vector<DistortionSpec> distortions;
};

SyntheticDataset make_synthetic_dataset(const SyntheticOptions& opts);

/// In-memory loaders over the distorted and clean images.
ExperimentData experiment_data(const SyntheticDataset& synth);

/// Writes images/, clean/ and annotations.json under `dir`.
void write_synthetic_dataset(const SyntheticDataset& synth,
                             const std::filesystem::path& dir);

}  // namespace purifuse
