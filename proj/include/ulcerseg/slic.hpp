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

// SLIC superpixels: localized k-means over (CIELAB, x, y) followed by
// 4-connectivity enforcement.

#pragma once

#include <array>
#include <vector>

#include "ulcerseg/imagecore.hpp"
#include "ulcerseg/partition.hpp"

namespace ulcerseg {

struct SlicParams {
  // Mean number of pixels per superpixel.
  int target_size = 550;
  // Spatial-vs-color weight m.
  double compactness = 10.0;
  int max_iters = 10;
  // Fragments smaller than this fraction of target_size are merged into
  // their largest neighbor.
  double connectivity_min_frac = 0.25;
};

// Throws InvalidArgument when the parameters are out of range.
void ValidateSlicParams(const SlicParams& params);

using LabPixels = std::vector<std::array<double, 3>>;

LabPixels ToLab(const RgbImage& image);

// Initial cluster count: round(n / target_size), at least 1.
int SeedCount(int width, int height, int target_size);

// Grid step s = sqrt(n / k).
double GridStep(int width, int height, int target_size);

// Seed centers (L, a, b, x, y) after the 3x3 lowest-gradient perturbation.
// Seeds are laid out in rows whose heights are proportional to the number
// of seeds they hold, so every seed starts with n / k pixels of area.
std::vector<SuperpixelCentroid> InitialSeeds(const LabPixels& lab, int width,
                                             int height,
                                             const SlicParams& params);

// Splits every label into 4-connected fragments, merges fragments smaller
// than min_size into the largest adjacent fragment (processed in raster
// order of their first pixel, ties to the earliest fragment) and relabels
// the result 0..count-1 in raster order of first appearance. Returns the
// number of superpixels.
int EnforceConnectivity(std::vector<int32_t>& labels, int width, int height,
                        double min_size);

// Fills count, centroids and sizes from labels.
void ComputePartitionStats(const LabPixels& lab, SuperpixelPartition& part);

// Runs SLIC. Throws InvalidArgument if the image is smaller than one
// superpixel or params are invalid.
SuperpixelPartition Partition(const RgbImage& image,
                              const SlicParams& params = {});

// Checks the partition invariants (total cover, ids in range, no empty id,
// 4-connectivity, size bookkeeping). Returns an empty string when valid,
// otherwise a description of the first violation.
std::string CheckPartition(const SuperpixelPartition& part);

}  // namespace ulcerseg
