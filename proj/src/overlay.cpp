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


#include "purifuse/overlay.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <map>

#include "purifuse/error.hpp"
#include "purifuse/image_io.hpp"
#include "purifuse/rng.hpp"

namespace purifuse {

namespace {

using Glyph = std::array<unsigned char, 7>;

struct GlyphEntry {
  char c;
  Glyph rows;
};

// Rows top to bottom, bit 4 is the leftmost column.
constexpr GlyphEntry kFont[] = {
    {'0', {0x0E, 0x11, 0x13, 0x15, 0x19, 0x11, 0x0E}},
    {'1', {0x04, 0x0C, 0x04, 0x04, 0x04, 0x04, 0x0E}},
    {'2', {0x0E, 0x11, 0x01, 0x02, 0x04, 0x08, 0x1F}},
    {'3', {0x1F, 0x02, 0x04, 0x02, 0x01, 0x11, 0x0E}},
    {'4', {0x02, 0x06, 0x0A, 0x12, 0x1F, 0x02, 0x02}},
    {'5', {0x1F, 0x10, 0x1E, 0x01, 0x01, 0x11, 0x0E}},
    {'6', {0x06, 0x08, 0x10, 0x1E, 0x11, 0x11, 0x0E}},
    {'7', {0x1F, 0x01, 0x02, 0x04, 0x08, 0x08, 0x08}},
    {'8', {0x0E, 0x11, 0x11, 0x0E, 0x11, 0x11, 0x0E}},
    {'9', {0x0E, 0x11, 0x11, 0x0F, 0x01, 0x02, 0x0C}},
    {'A', {0x0E, 0x11, 0x11, 0x1F, 0x11, 0x11, 0x11}},
    {'B', {0x1E, 0x11, 0x11, 0x1E, 0x11, 0x11, 0x1E}},
    {'C', {0x0E, 0x11, 0x10, 0x10, 0x10, 0x11, 0x0E}},
    {'D', {0x1C, 0x12, 0x11, 0x11, 0x11, 0x12, 0x1C}},
    {'E', {0x1F, 0x10, 0x10, 0x1E, 0x10, 0x10, 0x1F}},
    {'F', {0x1F, 0x10, 0x10, 0x1E, 0x10, 0x10, 0x10}},
    {'G', {0x0E, 0x11, 0x10, 0x17, 0x11, 0x11, 0x0F}},
    {'H', {0x11, 0x11, 0x11, 0x1F, 0x11, 0x11, 0x11}},
    {'I', {0x0E, 0x04, 0x04, 0x04, 0x04, 0x04, 0x0E}},
    {'J', {0x07, 0x02, 0x02, 0x02, 0x02, 0x12, 0x0C}},
    {'K', {0x11, 0x12, 0x14, 0x18, 0x14, 0x12, 0x11}},
    {'L', {0x10, 0x10, 0x10, 0x10, 0x10, 0x10, 0x1F}},
    {'M', {0x11, 0x1B, 0x15, 0x15, 0x11, 0x11, 0x11}},
    {'N', {0x11, 0x11, 0x19, 0x15, 0x13, 0x11, 0x11}},
    {'O', {0x0E, 0x11, 0x11, 0x11, 0x11, 0x11, 0x0E}},
    {'P', {0x1E, 0x11, 0x11, 0x1E, 0x10, 0x10, 0x10}},
    {'Q', {0x0E, 0x11, 0x11, 0x11, 0x15, 0x12, 0x0D}},
    {'R', {0x1E, 0x11, 0x11, 0x1E, 0x14, 0x12, 0x11}},
    {'S', {0x0F, 0x10, 0x10, 0x0E, 0x01, 0x01, 0x1E}},
    {'T', {0x1F, 0x04, 0x04, 0x04, 0x04, 0x04, 0x04}},
    {'U', {0x11, 0x11, 0x11, 0x11, 0x11, 0x11, 0x0E}},
    {'V', {0x11, 0x11, 0x11, 0x11, 0x11, 0x0A, 0x04}},
    {'W', {0x11, 0x11, 0x11, 0x15, 0x15, 0x15, 0x0A}},
    {'X', {0x11, 0x11, 0x0A, 0x04, 0x0A, 0x11, 0x11}},
    {'Y', {0x11, 0x11, 0x11, 0x0A, 0x04, 0x04, 0x04}},
    {'Z', {0x1F, 0x01, 0x02, 0x04, 0x08, 0x10, 0x1F}},
    {'.', {0x00, 0x00, 0x00, 0x00, 0x00, 0x0C, 0x0C}},
    {':', {0x00, 0x0C, 0x0C, 0x00, 0x0C, 0x0C, 0x00}},
    {'-', {0x00, 0x00, 0x00, 0x1F, 0x00, 0x00, 0x00}},
    {'_', {0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x1F}},
    {' ', {0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00}},
    {'?', {0x0E, 0x11, 0x01, 0x02, 0x04, 0x00, 0x04}},
};

const Glyph& glyph(char c) {
  if (c >= 'a' && c <= 'z') c = static_cast<char>(c - 'a' + 'A');
  for (const GlyphEntry& g : kFont) {
    if (g.c == c) return g.rows;
  }
  return glyph('?');
}

void put(ImageBuffer& img, int x, int y, Rgb c) {
  if (x < 0 || y < 0 || x >= img.width() || y >= img.height()) return;
  img.at(0, y, x) = c.r;
  img.at(1, y, x) = c.g;
  img.at(2, y, x) = c.b;
}

ImageBuffer to_rgb(const ImageBuffer& img) {
  if (img.channels() == 3) return img;
  ImageBuffer out(img.width(), img.height(), 3);
  for (int c = 0; c < 3; ++c) {
    std::copy(img.plane(0).begin(), img.plane(0).end(), out.plane(c).begin());
  }
  return out;
}

}  // namespace

Rgb class_color(int class_id) {
  const std::uint64_t h = mix64(static_cast<std::uint64_t>(class_id) + 1);
  const double hue = static_cast<double>(h >> 11) * 0x1.0p-53 * 6.0;
  const int sector = static_cast<int>(hue) % 6;
  const double f = hue - std::floor(hue);
  const double v = 1.0;
  const double s = 0.8;
  const double p = v * (1 - s);
  const double q = v * (1 - s * f);
  const double t = v * (1 - s * (1 - f));
  switch (sector) {
    case 0:
      return {v, t, p};
    case 1:
      return {q, v, p};
    case 2:
      return {p, v, t};
    case 3:
      return {p, q, v};
    case 4:
      return {t, p, v};
    default:
      return {v, p, q};
  }
}

void draw_rect(ImageBuffer& rgb, int x0, int y0, int x1, int y1, Rgb color) {
  if (rgb.channels() != 3) throw std::invalid_argument("draw_rect needs RGB");
  if (x1 < x0) std::swap(x0, x1);
  if (y1 < y0) std::swap(y0, y1);
  for (int x = x0; x <= x1; ++x) {
    put(rgb, x, y0, color);
    put(rgb, x, y1, color);
  }
  for (int y = y0; y <= y1; ++y) {
    put(rgb, x0, y, color);
    put(rgb, x1, y, color);
  }
}

void draw_text(ImageBuffer& rgb, int x, int y, const std::string& text,
               Rgb color, int scale) {
  if (rgb.channels() != 3) throw std::invalid_argument("draw_text needs RGB");
  if (scale < 1) throw std::invalid_argument("text scale must be >= 1");
  int pen = x;
  for (char ch : text) {
    const Glyph& g = glyph(ch);
    for (int row = 0; row < 7; ++row) {
      for (int col = 0; col < 5; ++col) {
        if (!(g[row] >> (4 - col) & 1)) continue;
        for (int dy = 0; dy < scale; ++dy) {
          for (int dx = 0; dx < scale; ++dx) {
            put(rgb, pen + col * scale + dx, y + row * scale + dy, color);
          }
        }
      }
    }
    pen += 6 * scale;
  }
}

ImageBuffer draw_overlay(const ImageBuffer& img, const GroundTruthSet& gt,
                         const DetectionSet& dets,
                         const std::vector<std::string>& class_names,
                         double min_confidence) {
  ImageBuffer out = to_rgb(img);
  const CoordSpace frame = CoordSpace::Absolute(img.width(), img.height());
  auto pixels = [&](const BBox& b) {
    const BBox a = convert(b, frame);
    return std::array<int, 4>{static_cast<int>(std::floor(a.x_min)),
                              static_cast<int>(std::floor(a.y_min)),
                              static_cast<int>(std::ceil(a.x_max)) - 1,
                              static_cast<int>(std::ceil(a.y_max)) - 1};
  };
  for (const GroundTruthBox& g : gt.boxes) {
    const auto p = pixels(g.box);
    draw_rect(out, p[0], p[1], p[2], p[3], Rgb{1.0, 1.0, 1.0});
  }
  for (const Detection& d : dets.detections) {
    if (d.confidence < min_confidence) continue;
    const Rgb color = class_color(d.class_id);
    const auto p = pixels(d.box);
    draw_rect(out, p[0], p[1], p[2], p[3], color);
    const std::string name =
        d.class_id >= 0 && d.class_id < static_cast<int>(class_names.size())
            ? class_names[d.class_id]
            : std::to_string(d.class_id);
    char conf[16];
    std::snprintf(conf, sizeof conf, "%.2f", d.confidence);
    const int ty = p[1] >= 8 ? p[1] - 8 : p[1] + 2;
    draw_text(out, p[0] + 1, ty, name + " " + conf, color);
  }
  return out;
}

std::vector<std::filesystem::path> render_overlays(
    const CocoDataset& ds, const ImageLoader& load,
    const std::vector<DetectionSet>& dets, const std::filesystem::path& out_dir,
    double min_confidence) {
  if (!load) throw DataError("overlay rendering needs source images");
  std::vector<std::string> names;
  for (const Category& c : ds.categories()) names.push_back(c.name);
  std::map<ImageId, const DetectionSet*> by_image;
  for (const DetectionSet& s : dets) {
    if (!ds.has_image(s.image_id)) {
      throw DataError("detections reference unknown image " +
                      std::to_string(s.image_id));
    }
    by_image[s.image_id] = &s;
  }
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw DataError("cannot create " + out_dir.string());
  std::vector<std::filesystem::path> written;
  const DetectionSet empty;
  for (std::size_t i = 0; i < ds.images().size(); ++i) {
    const ImageRecord& rec = ds.images()[i];
    const auto it = by_image.find(rec.id);
    const DetectionSet& d = it == by_image.end() ? empty : *it->second;
    const GroundTruthSet& gt = ds.ground_truth()[i];
    if (d.detections.empty() && gt.boxes.empty()) continue;
    const ImageBuffer overlay =
        draw_overlay(load(rec), gt, d, names, min_confidence);
    const auto path = out_dir / (std::to_string(rec.id) + ".png");
    auto tmp = path;
    tmp += ".tmp.png";
    write_image(tmp, overlay);
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw DataError("cannot write " + path.string());
    written.push_back(path);
  }
  return written;
}

}  // namespace purifuse
