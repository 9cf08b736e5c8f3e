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

#include "purifuse/image.hpp"

namespace purifuse {

enum class ImageFormat { kPng, kPnm };

/// 8-bit PNG (gray or RGB; alpha/palette/16-bit inputs are reduced) or
/// binary PGM/PPM (P5/P6, maxval <= 255). Format picked from file magic.
/// Throws DataError on unreadable or malformed files.
ImageBuffer read_image(const std::filesystem::path& path);

/// Quantizes to 8 bits (round to nearest). Format follows the extension:
/// .png, otherwise .pgm/.ppm/.pnm (PGM for 1 channel, PPM for 3).
void write_image(const std::filesystem::path& path, const ImageBuffer& img);

ImageFormat format_for_path(const std::filesystem::path& path);

bool is_image_path(const std::filesystem::path& path);

}  // namespace purifuse
