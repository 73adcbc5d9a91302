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

#pragma once

#include <cstdint>
#include <vector>

namespace ulcerseg {

// Mean CIELAB color and mean position of one superpixel.
struct SuperpixelCentroid {
  double l = 0.0;
  double a = 0.0;
  double b = 0.0;
  double x = 0.0;
  double y = 0.0;
};

// Per-pixel superpixel ids (row-major, 0-based) plus per-superpixel stats.
// Every id in [0, count) is used by at least one pixel and each superpixel
// is 4-connected.
struct SuperpixelPartition {
  int width = 0;
  int height = 0;
  std::vector<int32_t> labels;
  int count = 0;
  std::vector<SuperpixelCentroid> centroids;
  std::vector<int64_t> sizes;

  int32_t label_at(int x, int y) const {
    return labels[static_cast<size_t>(y) * width + x];
  }
};

}  // namespace ulcerseg
