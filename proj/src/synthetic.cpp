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


#include "purifuse/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <stdexcept>
#include <unordered_map>

#include "purifuse/error.hpp"
#include "purifuse/image_io.hpp"
#include "purifuse/rng.hpp"

namespace purifuse {

namespace {

constexpr std::uint64_t kSceneDomain = 0x5ce7e5ULL;
constexpr std::uint64_t kDistortDomain = 0xd157ULL;

void fill_rect(ImageBuffer& img, int x0, int y0, int x1, int y1,
               const double* value) {
  for (int c = 0; c < img.channels(); ++c) {
    for (int y = std::max(0, y0); y < std::min(img.height(), y1); ++y) {
      for (int x = std::max(0, x0); x < std::min(img.width(), x1); ++x) {
        img.at(c, y, x) = value[c];
      }
    }
  }
}

}  // namespace

ImageBuffer make_test_card(int width, int height, int channels) {
  ImageBuffer img(width, height, channels);
  const double tint[3] = {1.0, 0.8, 0.6};
  for (int c = 0; c < channels; ++c) {
    for (int y = 0; y < height; ++y) {
      for (int x = 0; x < width; ++x) {
        const double u = static_cast<double>(x) / width;
        const double v = static_cast<double>(y) / height;
        double p = 0.15 + 0.25 * u + 0.1 * v;
        // Flat patches.
        if (u > 0.1 && u < 0.4 && v > 0.1 && v < 0.35) p = 0.85;
        if (u > 0.55 && u < 0.9 && v > 0.15 && v < 0.3) p = 0.05;
        // Disk.
        const double dx = u - 0.3;
        const double dy = v - 0.65;
        if (dx * dx + dy * dy < 0.04) p = 0.7;
        // Vertical stripes, 2 px period.
        if (u > 0.55 && u < 0.9 && v > 0.4 && v < 0.6) {
          p = (x / 2) % 2 ? 0.9 : 0.2;
        }
        // Checkerboard, 4 px squares.
        if (u > 0.55 && u < 0.9 && v > 0.7 && v < 0.9) {
          p = ((x / 4) + (y / 4)) % 2 ? 0.8 : 0.1;
        }
        img.at(c, y, x) = std::clamp(p * (channels == 3 ? tint[c] : 1.0) +
                                         (channels == 3 ? 0.05 * c : 0.0),
                                     0.0, 1.0);
      }
    }
  }
  return img;
}

SyntheticDataset make_synthetic_dataset(const SyntheticOptions& o) {
  if (o.num_images < 1 || o.width < 8 || o.height < 8 || o.num_classes < 1 ||
      o.max_objects < 1 || (o.channels != 1 && o.channels != 3)) {
    throw std::invalid_argument("invalid synthetic dataset options");
  }
  SyntheticDataset out;
  std::vector<Category> cats;
  for (int c = 0; c < o.num_classes; ++c) {
    cats.push_back({c + 1, "class" + std::to_string(c + 1)});
  }
  std::vector<ImageRecord> records;
  std::vector<GroundTruthSet> gts;
  const CoordSpace frame = CoordSpace::Absolute(o.width, o.height);
  for (int i = 0; i < o.num_images; ++i) {
    const ImageId id = i + 1;
    CounterRng rng = CounterRng::ForStream(o.seed, static_cast<std::uint64_t>(id),
                                           kSceneDomain);
    ImageBuffer img(o.width, o.height, o.channels);
    const double g0 = rng.uniform(0.1, 0.3);
    const double gx = rng.uniform(-0.1, 0.1);
    const double gy = rng.uniform(-0.1, 0.1);
    for (int c = 0; c < o.channels; ++c) {
      for (int y = 0; y < o.height; ++y) {
        for (int x = 0; x < o.width; ++x) {
          img.at(c, y, x) = g0 + gx * x / o.width + gy * y / o.height;
        }
      }
    }
    GroundTruthSet gt{id, {}};
    const int n_obj = 1 + static_cast<int>(rng.below(o.max_objects));
    for (int k = 0; k < n_obj; ++k) {
      const int cls = static_cast<int>(rng.below(o.num_classes));
      const int bw = std::max(3, static_cast<int>(o.width * rng.uniform(0.15, 0.4)));
      const int bh =
          std::max(3, static_cast<int>(o.height * rng.uniform(0.15, 0.4)));
      const int x0 = static_cast<int>(rng.below(o.width - bw + 1));
      const int y0 = static_cast<int>(rng.below(o.height - bh + 1));
      const double level =
          o.num_classes == 1 ? 0.8 : 0.45 + 0.5 * cls / (o.num_classes - 1);
      double value[3];
      for (int c = 0; c < 3; ++c) value[c] = std::clamp(level - 0.1 * c * cls, 0.0, 1.0);
      fill_rect(img, x0, y0, x0 + bw, y0 + bh, value);
      gt.boxes.push_back(
          {convert(BBox::Make(x0, y0, x0 + bw, y0 + bh, frame),
                   CoordSpace::Normalized()),
           cls, false});
    }
    img.clamp();
    records.push_back({id, "img_" + std::to_string(id) + ".png", o.width,
                       o.height});
    gts.push_back(std::move(gt));

    ImageBuffer distorted = img;
    if (o.distort) {
      CounterRng pick = CounterRng::ForStream(
          o.seed, static_cast<std::uint64_t>(id), kDistortDomain);
      const int kind = static_cast<int>(pick.below(3));
      const DistortionSpec spec = DistortionSpec::Preset(kind, o.severity, o.seed);
      distorted = distort(img, spec, static_cast<std::uint64_t>(id));
      out.distortions.push_back(spec);
    }
    out.clean.push_back(std::move(img));
    out.distorted.push_back(std::move(distorted));
  }
  out.dataset = CocoDataset(std::move(cats), std::move(records), std::move(gts));
  return out;
}

ExperimentData experiment_data(const SyntheticDataset& synth) {
  auto shared = std::make_shared<const SyntheticDataset>(synth);
  auto index = std::make_shared<std::unordered_map<ImageId, std::size_t>>();
  for (std::size_t i = 0; i < synth.dataset.images().size(); ++i) {
    (*index)[synth.dataset.images()[i].id] = i;
  }
  auto lookup = [index](const ImageRecord& r) {
    const auto it = index->find(r.id);
    if (it == index->end()) {
      throw DataError("no synthetic image " + std::to_string(r.id));
    }
    return it->second;
  };
  ExperimentData data;
  data.dataset = synth.dataset;
  data.load_image = [shared, lookup](const ImageRecord& r) {
    return shared->distorted[lookup(r)];
  };
  data.load_clean = [shared, lookup](const ImageRecord& r) {
    return shared->clean[lookup(r)];
  };
  return data;
}

void write_synthetic_dataset(const SyntheticDataset& synth,
                             const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir / "images");
  std::filesystem::create_directories(dir / "clean");
  const auto& images = synth.dataset.images();
  for (std::size_t i = 0; i < images.size(); ++i) {
    write_image(dir / "images" / images[i].file_name, synth.distorted[i]);
    write_image(dir / "clean" / images[i].file_name, synth.clean[i]);
  }
  write_json_atomic(dir / "annotations.json",
                    to_coco_annotations(synth.dataset));
}

}  // namespace purifuse
