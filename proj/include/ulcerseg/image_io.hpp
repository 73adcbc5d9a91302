/*
 * Copyright 2026 The ulcerseg Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// PNG/JPEG input and the PNG artifacts written by the tools: 16-bit
// superpixel id maps and palette-indexed tissue masks.

#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "ulcerseg/imagecore.hpp"
#include "ulcerseg/partition.hpp"

namespace ulcerseg {

// Fixed mask palette, indexed by tissue class code.
inline constexpr std::array<Rgb8, kNumTissueClasses> kMaskPalette = {{
    {0, 0, 0},       // not wound
    {220, 20, 60},   // granulation
    {255, 215, 0},   // fibrin
    {64, 64, 64},    // necrosis
}};

// Reads an 8-bit PNG or baseline JPEG as RGB (alpha dropped, gray
// expanded, 16-bit reduced). The format is detected from the file
// signature. Throws DataError on unreadable input.
RgbImage ReadImage(const std::string& path);

void WritePng(const std::string& path, const RgbImage& image);

// 16-bit grayscale PNG whose value is the superpixel id. Throws
// InvalidArgument if the partition has more than 65,535 superpixels.
void WritePartitionPng(const std::string& path, const SuperpixelPartition& part);

struct LabelMap {
  int width = 0;
  int height = 0;
  std::vector<int32_t> labels;
};

LabelMap ReadPartitionPng(const std::string& path);

// Palette-indexed PNG with kMaskPalette.
void WriteMaskPng(const std::string& path, const ClassMap& mask);

// Reads a mask written by WriteMaskPng, or any RGB PNG whose pixels are
// exactly palette colors. Throws DataError for pixels outside the palette.
ClassMap ReadMaskPng(const std::string& path);

// Writes through a temporary file in the same directory followed by a
// rename, so readers never observe a partial file.
void WriteFileAtomic(const std::string& path, const std::string& bytes);
std::string ReadFile(const std::string& path);

}  // namespace ulcerseg
