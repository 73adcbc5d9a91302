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

// MPEG-7 color descriptors over superpixel patches: Color Layout (12),
// Color Structure (128) and Scalable Color (256). Values are emitted as
// unquantized reals.

#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "ulcerseg/imagecore.hpp"

namespace ulcerseg {

enum class DescriptorKind {
  kColorLayout,
  kColorStructure,
  kScalableColor,
  kPcaReduced,
};

// "cld", "csd", "scd", "pca".
const char* DescriptorName(DescriptorKind kind);
DescriptorKind ParseDescriptor(std::string_view name);
// 12, 128 or 256; 0 for kPcaReduced (data dependent).
int DescriptorDim(DescriptorKind kind);

struct FeatureVector {
  DescriptorKind kind = DescriptorKind::kColorLayout;
  std::vector<double> values;

  size_t dim() const { return values.size(); }
};

// ColorLayout: 8x8 block means -> YCbCr -> 8x8 orthonormal DCT-II per
// channel -> JPEG zigzag; first 6 Y, 3 Cb and 3 Cr coefficients.
// ColorStructure: 128-cell HMMD histogram counting, for every 8x8
// structuring-element position, each cell present at least once; divided
// by the number of positions. Patches under 8x8 are edge-padded.
// ScalableColor: 16x4x4 HSV histogram over mask pixels (sum 1) followed by
// an 8-level Haar sum/difference transform.
// ColorLayout and ColorStructure use the whole (mean-filled) rectangle.
// Throws InvalidArgument for kPcaReduced or an invalid patch.
FeatureVector Extract(const Patch& patch, DescriptorKind kind);

// Building blocks, exposed for testing.
std::vector<double> HsvHistogram(const Patch& patch);
void HaarTransform(std::vector<double>& values);
int CsdCell(double hue, double diff, double sum);
// Structuring-element subsampling factor for a width x height patch.
int CsdSubsampling(int width, int height);

// One row of a feature dump.
struct FeatureRow {
  std::string image_id;
  int superpixel_id = 0;
  TissueClass label = TissueClass::kNotWound;
  std::vector<double> values;
};

struct FeatureTable {
  DescriptorKind kind = DescriptorKind::kColorLayout;
  std::vector<FeatureRow> rows;

  size_t dim() const { return rows.empty() ? 0 : rows.front().values.size(); }
};

// CSV with header `image_id,superpixel_id,label,f0,...,f{d-1}`. Labels are
// written as class codes; values use shortest round-trip formatting.
std::string FormatFeatureCsv(const FeatureTable& table);
// Throws DataError on malformed input. Labels may be codes or names. The
// descriptor kind is inferred from the dimension (12/128/256, otherwise
// kPcaReduced).
FeatureTable ParseFeatureCsv(const std::string& text);

}  // namespace ulcerseg
