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

#include "purifuse/coco.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "purifuse/error.hpp"

namespace purifuse {

CocoDataset::CocoDataset(std::vector<Category> categories,
                         std::vector<ImageRecord> images,
                         std::vector<GroundTruthSet> ground_truth)
    : categories_(std::move(categories)),
      images_(std::move(images)),
      gt_(std::move(ground_truth)) {
  std::stable_sort(categories_.begin(), categories_.end(),
                   [](const Category& a, const Category& b) {
                     return a.id < b.id;
                   });
  for (std::size_t i = 0; i < categories_.size(); ++i) {
    if (!class_of_category_.emplace(categories_[i].id, static_cast<int>(i))
             .second) {
      throw DataError("duplicate category id " +
                      std::to_string(categories_[i].id));
    }
  }
  if (gt_.size() != images_.size()) {
    throw DataError("ground truth does not line up with the image table");
  }
  for (std::size_t i = 0; i < images_.size(); ++i) {
    if (!image_pos_.emplace(images_[i].id, i).second) {
      throw DataError("duplicate image id " + std::to_string(images_[i].id));
    }
    if (gt_[i].image_id != images_[i].id) {
      throw DataError("ground truth order does not match image order");
    }
  }
}

int CocoDataset::class_index(int category_id) const {
  const auto it = class_of_category_.find(category_id);
  if (it == class_of_category_.end()) {
    throw DataError("unknown category id " + std::to_string(category_id));
  }
  return it->second;
}

int CocoDataset::category_id(int class_index) const {
  if (class_index < 0 || class_index >= num_classes()) {
    throw DataError("class index " + std::to_string(class_index) +
                    " outside category table");
  }
  return categories_[class_index].id;
}

const ImageRecord& CocoDataset::image(ImageId id) const {
  const auto it = image_pos_.find(id);
  if (it == image_pos_.end()) {
    throw DataError("unknown image id " + std::to_string(id));
  }
  return images_[it->second];
}

const GroundTruthSet& CocoDataset::ground_truth_for(ImageId id) const {
  const auto it = image_pos_.find(id);
  if (it == image_pos_.end()) {
    throw DataError("unknown image id " + std::to_string(id));
  }
  return gt_[it->second];
}

namespace {

template <class T>
T get_field(const Json& obj, const char* key, const char* what) {
  if (!obj.is_object() || !obj.contains(key)) {
    throw DataError(std::string(what) + " is missing '" + key + "'");
  }
  try {
    return obj.at(key).get<T>();
  } catch (const Json::exception& e) {
    throw DataError(std::string(what) + " field '" + key +
                    "' has the wrong type");
  }
}

BBox bbox_from_json(const Json& arr, const ImageRecord& img) {
  if (!arr.is_array() || arr.size() != 4) {
    throw DataError("bbox must be [x, y, width, height]");
  }
  for (const Json& v : arr) {
    if (!v.is_number()) throw DataError("bbox entries must be numbers");
  }
  const double x = arr[0].get<double>();
  const double y = arr[1].get<double>();
  const double w = arr[2].get<double>();
  const double h = arr[3].get<double>();
  if (w < 0.0 || h < 0.0) throw DataError("bbox has negative size");
  try {
    const BBox abs = BBox::FromXywh(
        x, y, w, h, CoordSpace::Absolute(img.width, img.height));
    return convert(abs, CoordSpace::Normalized());
  } catch (const std::invalid_argument& e) {
    throw DataError(std::string("invalid bbox: ") + e.what());
  }
}

std::vector<double> bbox_to_json(const BBox& b, const ImageRecord& img) {
  const BBox a = convert(b, CoordSpace::Absolute(img.width, img.height));
  return {a.x_min, a.y_min, a.x_max - a.x_min, a.y_max - a.y_min};
}

}  // namespace

CocoDataset parse_coco_annotations(const Json& doc) {
  if (!doc.is_object()) throw DataError("annotation file must be an object");
  std::vector<Category> cats;
  for (const Json& c : get_field<Json>(doc, "categories", "annotations")) {
    cats.push_back({get_field<int>(c, "id", "category"),
                    c.value("name", std::string{})});
  }
  std::vector<ImageRecord> images;
  for (const Json& im : get_field<Json>(doc, "images", "annotations")) {
    ImageRecord r;
    r.id = get_field<ImageId>(im, "id", "image");
    r.file_name = im.value("file_name", std::string{});
    r.width = get_field<int>(im, "width", "image");
    r.height = get_field<int>(im, "height", "image");
    if (r.width <= 0 || r.height <= 0) {
      throw DataError("image " + std::to_string(r.id) +
                      " has nonpositive dimensions");
    }
    images.push_back(std::move(r));
  }
  std::vector<GroundTruthSet> gts;
  std::unordered_map<ImageId, std::size_t> pos;
  for (std::size_t i = 0; i < images.size(); ++i) {
    gts.push_back({images[i].id, {}});
    pos[images[i].id] = i;
  }
  CocoDataset skeleton(cats, images, gts);
  const Json anns = doc.value("annotations", Json::array());
  for (const Json& a : anns) {
    const ImageId image_id = get_field<ImageId>(a, "image_id", "annotation");
    const auto it = pos.find(image_id);
    if (it == pos.end()) {
      throw DataError("annotation references unknown image " +
                      std::to_string(image_id));
    }
    GroundTruthBox g;
    g.box = bbox_from_json(get_field<Json>(a, "bbox", "annotation"),
                           images[it->second]);
    g.class_id =
        skeleton.class_index(get_field<int>(a, "category_id", "annotation"));
    g.iscrowd = a.value("iscrowd", 0) != 0;
    gts[it->second].boxes.push_back(g);
  }
  return CocoDataset(std::move(cats), std::move(images), std::move(gts));
}

Json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw DataError("malformed JSON in " + path.string() + ": " + e.what());
  }
}

CocoDataset load_coco_annotations(const std::filesystem::path& path) {
  return parse_coco_annotations(read_json_file(path));
}

Json to_coco_annotations(const CocoDataset& ds) {
  Json images = Json::array();
  Json anns = Json::array();
  Json cats = Json::array();
  for (const Category& c : ds.categories()) {
    cats.push_back({{"id", c.id}, {"name", c.name}});
  }
  std::int64_t ann_id = 1;
  for (std::size_t i = 0; i < ds.images().size(); ++i) {
    const ImageRecord& r = ds.images()[i];
    images.push_back({{"id", r.id},
                      {"file_name", r.file_name},
                      {"width", r.width},
                      {"height", r.height}});
    for (const GroundTruthBox& g : ds.ground_truth()[i].boxes) {
      const auto bb = bbox_to_json(g.box, r);
      anns.push_back({{"id", ann_id++},
                      {"image_id", r.id},
                      {"category_id", ds.category_id(g.class_id)},
                      {"bbox", bb},
                      {"area", bb[2] * bb[3]},
                      {"iscrowd", g.iscrowd ? 1 : 0}});
    }
  }
  return {{"images", images}, {"annotations", anns}, {"categories", cats}};
}

std::vector<DetectionSet> parse_coco_results(const Json& doc,
                                             const CocoDataset& ds,
                                             int source_id) {
  if (!doc.is_array()) throw DataError("detection results must be an array");
  std::vector<DetectionSet> sets;
  std::unordered_map<ImageId, std::size_t> pos;
  for (const ImageRecord& r : ds.images()) {
    pos[r.id] = sets.size();
    sets.push_back({r.id, {}, 1.0});
  }
  for (const Json& rec : doc) {
    const ImageId image_id = get_field<ImageId>(rec, "image_id", "detection");
    const auto it = pos.find(image_id);
    if (it == pos.end()) {
      throw DataError("detection references unknown image " +
                      std::to_string(image_id));
    }
    Detection d;
    d.box = bbox_from_json(get_field<Json>(rec, "bbox", "detection"),
                           ds.image(image_id));
    d.class_id =
        ds.class_index(get_field<int>(rec, "category_id", "detection"));
    d.confidence = get_field<double>(rec, "score", "detection");
    if (!(d.confidence >= 0.0 && d.confidence <= 1.0)) {
      throw DataError("detection score outside [0,1]");
    }
    d.source_id = source_id;
    sets[it->second].detections.push_back(d);
  }
  return sets;
}

std::vector<DetectionSet> load_coco_results(const std::filesystem::path& path,
                                            const CocoDataset& ds,
                                            int source_id) {
  return parse_coco_results(read_json_file(path), ds, source_id);
}

Json to_coco_results(const std::vector<DetectionSet>& sets,
                     const CocoDataset& ds) {
  Json out = Json::array();
  for (const DetectionSet& s : sets) {
    const ImageRecord& r = ds.image(s.image_id);
    for (const Detection& d : s.detections) {
      out.push_back({{"image_id", s.image_id},
                     {"category_id", ds.category_id(d.class_id)},
                     {"bbox", bbox_to_json(d.box, r)},
                     {"score", d.confidence}});
    }
  }
  return out;
}

void write_file_atomic(const std::filesystem::path& path,
                       const std::string& content) {
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path());
  }
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) throw DataError("failed writing " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

void write_json_atomic(const std::filesystem::path& path, const Json& doc) {
  write_file_atomic(path, doc.dump(2) + "\n");
}

}  // namespace purifuse
