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

#include "purifuse/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <vector>

#include "purifuse/error.hpp"

namespace purifuse {

namespace {

std::uint8_t quantize(double v) {
  if (!std::isfinite(v)) v = 0.0;
  return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

std::string lower_ext(const std::filesystem::path& p) {
  std::string e = p.extension().string();
  std::transform(e.begin(), e.end(), e.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return e;
}

// --- PNG -------------------------------------------------------------------

ImageBuffer read_png(const std::filesystem::path& path) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.c_str())) {
    throw DataError("png: " + std::string(image.message) + " (" +
                    path.string() + ")");
  }
  const bool color = (image.format & PNG_FORMAT_FLAG_COLOR) != 0;
  image.format = color ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  const int channels = color ? 3 : 1;
  std::vector<std::uint8_t> raw(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, raw.data(), 0, nullptr)) {
    const std::string msg = image.message;
    png_image_free(&image);
    throw DataError("png: " + msg + " (" + path.string() + ")");
  }
  const int w = static_cast<int>(image.width);
  const int h = static_cast<int>(image.height);
  ImageBuffer img(w, h, channels);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < channels; ++c) {
        img.at(c, y, x) =
            raw[(static_cast<std::size_t>(y) * w + x) * channels + c] / 255.0;
      }
    }
  }
  return img;
}

void write_png(const std::filesystem::path& path, const ImageBuffer& img) {
  const int w = img.width();
  const int h = img.height();
  const int ch = img.channels();
  std::vector<std::uint8_t> raw(img.size());
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < ch; ++c) {
        raw[(static_cast<std::size_t>(y) * w + x) * ch + c] =
            quantize(img.at(c, y, x));
      }
    }
  }
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(w);
  image.height = static_cast<png_uint_32>(h);
  image.format = ch == 1 ? PNG_FORMAT_GRAY : PNG_FORMAT_RGB;
  if (!png_image_write_to_file(&image, path.c_str(), 0, raw.data(), 0,
                               nullptr)) {
    throw DataError("png: " + std::string(image.message) + " (" +
                    path.string() + ")");
  }
}

// --- PNM -------------------------------------------------------------------

int read_pnm_int(std::istream& in) {
  int c = in.peek();
  while (in && (std::isspace(c) || c == '#')) {
    if (c == '#') {
      std::string skip;
      std::getline(in, skip);
    } else {
      in.get();
    }
    c = in.peek();
  }
  int v = -1;
  if (!(in >> v)) throw DataError("pnm: malformed header");
  return v;
}

ImageBuffer read_pnm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open image file " + path.string());
  char magic[2] = {};
  in.read(magic, 2);
  if (magic[0] != 'P' || (magic[1] != '5' && magic[1] != '6')) {
    throw DataError("pnm: only binary P5/P6 supported: " + path.string());
  }
  const int channels = magic[1] == '5' ? 1 : 3;
  const int w = read_pnm_int(in);
  const int h = read_pnm_int(in);
  const int maxval = read_pnm_int(in);
  if (w <= 0 || h <= 0 || maxval <= 0 || maxval > 255) {
    throw DataError("pnm: unsupported header in " + path.string());
  }
  in.get();  // single whitespace after maxval
  std::vector<std::uint8_t> raw(static_cast<std::size_t>(w) * h * channels);
  in.read(reinterpret_cast<char*>(raw.data()),
          static_cast<std::streamsize>(raw.size()));
  if (in.gcount() != static_cast<std::streamsize>(raw.size())) {
    throw DataError("pnm: truncated pixel data in " + path.string());
  }
  ImageBuffer img(w, h, channels);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < channels; ++c) {
        img.at(c, y, x) =
            raw[(static_cast<std::size_t>(y) * w + x) * channels + c] /
            static_cast<double>(maxval);
      }
    }
  }
  return img;
}

void write_pnm(const std::filesystem::path& path, const ImageBuffer& img) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write image file " + path.string());
  const int ch = img.channels();
  out << (ch == 1 ? "P5" : "P6") << '\n'
      << img.width() << ' ' << img.height() << "\n255\n";
  std::vector<std::uint8_t> raw(img.size());
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      for (int c = 0; c < ch; ++c) {
        raw[(static_cast<std::size_t>(y) * img.width() + x) * ch + c] =
            quantize(img.at(c, y, x));
      }
    }
  }
  out.write(reinterpret_cast<const char*>(raw.data()),
            static_cast<std::streamsize>(raw.size()));
  if (!out) throw DataError("failed writing " + path.string());
}

}  // namespace

ImageFormat format_for_path(const std::filesystem::path& path) {
  return lower_ext(path) == ".png" ? ImageFormat::kPng : ImageFormat::kPnm;
}

bool is_image_path(const std::filesystem::path& path) {
  const std::string e = lower_ext(path);
  return e == ".png" || e == ".ppm" || e == ".pgm" || e == ".pnm";
}

ImageBuffer read_image(const std::filesystem::path& path) {
  std::ifstream probe(path, std::ios::binary);
  if (!probe) throw DataError("cannot open image file " + path.string());
  unsigned char sig[8] = {};
  probe.read(reinterpret_cast<char*>(sig), 8);
  const auto got = probe.gcount();
  probe.close();
  if (got == 8 && png_sig_cmp(sig, 0, 8) == 0) return read_png(path);
  if (got >= 2 && sig[0] == 'P') return read_pnm(path);
  throw DataError("unrecognized image format: " + path.string());
}

void write_image(const std::filesystem::path& path, const ImageBuffer& img) {
  if (img.empty()) throw DataError("refusing to write an empty image");
  if (format_for_path(path) == ImageFormat::kPng) {
    write_png(path, img);
  } else {
    write_pnm(path, img);
  }
}

}  // namespace purifuse
