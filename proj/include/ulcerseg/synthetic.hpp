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

// Synthetic wound photographs with known tissue masks: a skin-tone
// background, a red granulation bed, a yellow fibrin ring around it and
// optional dark necrotic islands.

#pragma once

#include <cstdint>

#include "ulcerseg/imagecore.hpp"

namespace ulcerseg {

// Base color of every tissue class in synthetic images.
inline constexpr std::array<Rgb8, kNumTissueClasses> kSyntheticTissueColors = {{
    {222, 172, 140},
    {196, 36, 48},
    {232, 204, 70},
    {48, 40, 36},
}};

struct SyntheticParams {
  int width = 192;
  int height = 192;
  // Per-channel uniform noise amplitude.
  int noise = 12;
  bool necrosis = true;
};

struct SyntheticWound {
  RgbImage image;
  ClassMap truth;
};

// Deterministic in (params, seed). Throws InvalidArgument for images
// smaller than 64x64 or noise outside [0, 100].
SyntheticWound GenerateSyntheticWound(const SyntheticParams& params, uint64_t seed);

}  // namespace ulcerseg
