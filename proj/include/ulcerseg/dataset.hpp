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

// On-disk datasets: a directory holding images.csv and labels.csv.
//
//   images.csv  image_id,image[,partition][,mask]   paths relative to the
//               directory; partition is a 16-bit id PNG, mask a tissue mask
//   labels.csv  image_id,superpixel_id,class
//
// When labels.csv is absent, labels are derived from the reference masks
// by superpixel majority.

#pragma once

#include <string>
#include <vector>

#include "ulcerseg/imagecore.hpp"
#include "ulcerseg/partition.hpp"
#include "ulcerseg/slic.hpp"

namespace ulcerseg {

struct DatasetImage {
  std::string id;
  std::string image;
  std::string partition;
  std::string mask;
};

struct LabelRow {
  std::string image_id;
  int superpixel_id = 0;
  TissueClass label = TissueClass::kNotWound;
  friend bool operator==(const LabelRow&, const LabelRow&) = default;
};

struct DatasetManifest {
  std::string root;
  std::vector<DatasetImage> images;
  std::vector<LabelRow> labels;

  // Throws NotFound for an unknown id.
  const DatasetImage& image(const std::string& id) const;
  std::string resolve(const std::string& relative) const;
};

// Header names are matched case-insensitively with common aliases
// (image/img/filename, superpixel/sp/segment, label/tissue/category), and
// image ids carrying an image extension are reduced to their stem.
// Throws DataError on malformed rows.
std::vector<LabelRow> ParseLabelsCsv(const std::string& text);
std::string FormatLabelsCsv(const std::vector<LabelRow>& rows);

std::vector<DatasetImage> ParseImagesCsv(const std::string& text);
std::string FormatImagesCsv(const std::vector<DatasetImage>& images);

// Reads the manifest. Label rows are checked against image ids; superpixel
// ids are checked when partitions are loaded.
DatasetManifest LoadDataset(const std::string& root);

// Stored partition if the manifest lists one, otherwise SLIC with params.
SuperpixelPartition LoadPartition(const DatasetManifest& dataset, const DatasetImage& image,
                                  const RgbImage& pixels, const SlicParams& params);

// Throws DataError when a label row of `image_id` names a superpixel that
// does not exist in `partition`.
void ValidateLabels(const DatasetManifest& dataset, const std::string& image_id,
                    const SuperpixelPartition& partition);

// One loaded image with its partition and labeled superpixels, in label
// file order.
struct LabeledImage {
  const DatasetImage* entry = nullptr;
  RgbImage pixels;
  SuperpixelPartition partition;
  std::vector<LabelRow> labels;
};

// Loads every image that has labels (or a mask when labels.csv is absent).
std::vector<LabeledImage> LoadLabeledImages(const DatasetManifest& dataset,
                                            const SlicParams& params);

}  // namespace ulcerseg
