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

#include <filesystem>
#include <string>
#include <unordered_map>
#include <vector>

#include "json.hpp"
#include "purifuse/evaluator.hpp"
#include "purifuse/fusion.hpp"

namespace purifuse {

struct Category {
  int id = 0;  // COCO category id
  std::string name;
};

struct ImageRecord {
  ImageId id = 0;
  std::string file_name;
  int width = 0;
  int height = 0;
};

/// COCO annotation file in memory. Categories are ordered by COCO id and
/// addressed internally by their position (class index); boxes are stored
/// normalized.
class CocoDataset {
 public:
  CocoDataset() = default;
  CocoDataset(std::vector<Category> categories,
              std::vector<ImageRecord> images,
              std::vector<GroundTruthSet> ground_truth);

  const std::vector<Category>& categories() const { return categories_; }
  const std::vector<ImageRecord>& images() const { return images_; }
  const std::vector<GroundTruthSet>& ground_truth() const { return gt_; }
  int num_classes() const { return static_cast<int>(categories_.size()); }

  /// Throw DataError for unknown ids.
  int class_index(int category_id) const;
  int category_id(int class_index) const;
  const ImageRecord& image(ImageId id) const;
  const GroundTruthSet& ground_truth_for(ImageId id) const;
  bool has_image(ImageId id) const { return image_pos_.count(id) > 0; }

 private:
  std::vector<Category> categories_;
  std::vector<ImageRecord> images_;
  std::vector<GroundTruthSet> gt_;  // parallel to images_
  std::unordered_map<int, int> class_of_category_;
  std::unordered_map<ImageId, std::size_t> image_pos_;
};

using Json = nlohmann::json;

/// Throws DataError on malformed documents.
CocoDataset parse_coco_annotations(const Json& doc);
CocoDataset load_coco_annotations(const std::filesystem::path& path);
Json to_coco_annotations(const CocoDataset& ds);

/// Detection results: [{image_id, category_id, bbox: [x,y,w,h], score}].
/// Returns one set per dataset image, in dataset order; each carries
/// `source_id`. Throws DataError for unknown images or categories.
std::vector<DetectionSet> parse_coco_results(const Json& doc,
                                             const CocoDataset& ds,
                                             int source_id = 0);
std::vector<DetectionSet> load_coco_results(const std::filesystem::path& path,
                                            const CocoDataset& ds,
                                            int source_id = 0);
Json to_coco_results(const std::vector<DetectionSet>& sets,
                     const CocoDataset& ds);

/// Parses a JSON file, mapping parse failures to DataError.
Json read_json_file(const std::filesystem::path& path);

/// Writes to a sibling temp file, then renames over `path`.
void write_file_atomic(const std::filesystem::path& path,
                       const std::string& content);
void write_json_atomic(const std::filesystem::path& path, const Json& doc);

}  // namespace purifuse
