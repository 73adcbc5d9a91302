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

// Brute-force SLIC used as a test oracle. Every pixel is compared against
// every center whose 2s x 2s window contains it; connectivity is resolved
// with a two-pass union-find labeling and whole-image scans.

#pragma once

#include <vector>

#include "ulcerseg/slic.hpp"

namespace ulcerseg::testing {

std::vector<int32_t> ReferenceSlic(const RgbImage& image,
                                   const std::vector<SuperpixelCentroid>& seeds,
                                   const SlicParams& params);

// Fraction of reference boundary pixels that are also boundary pixels in
// `candidate` (exact position match).
double BoundaryRecall(const std::vector<int32_t>& reference,
                      const std::vector<int32_t>& candidate, int width,
                      int height);

}  // namespace ulcerseg::testing
