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

#include "ulcerseg/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "ulcerseg/error.hpp"
#include "ulcerseg/random.hpp"

namespace ulcerseg {

SyntheticWound GenerateSyntheticWound(const SyntheticParams& params, uint64_t seed) {
  if (params.width < 64 || params.height < 64) {
    throw InvalidArgument("synthetic images must be at least 64x64");
  }
  if (params.noise < 0 || params.noise > 100) {
    throw InvalidArgument("synthetic noise must be in [0, 100]");
  }
  Rng rng(seed);
  const double w = params.width, h = params.height;
  const double side = std::min(w, h);
  const double cx = rng.Uniform(0.42, 0.58) * w;
  const double cy = rng.Uniform(0.42, 0.58) * h;
  // Elliptic wound: outer fibrin boundary and inner granulation bed.
  const double ax = rng.Uniform(0.85, 1.15), ay = rng.Uniform(0.85, 1.15);
  const double outer = side * rng.Uniform(0.36, 0.42);
  const double inner = outer * rng.Uniform(0.52, 0.60);
  const double angle = rng.Uniform(0.0, 2.0 * std::numbers::pi);
  const double nx = cx + 0.4 * inner * std::cos(angle) * ax;
  const double ny = cy + 0.4 * inner * std::sin(angle) * ay;
  const double necrosis_r = 0.5 * inner;

  std::array<std::array<int, 3>, kNumTissueClasses> tint;
  for (int c = 0; c < kNumTissueClasses; ++c) {
    const Rgb8 base = kSyntheticTissueColors[c];
    for (int k = 0; k < 3; ++k) {
      const int jitter = static_cast<int>(rng.Index(17)) - 8;
      tint[c][k] = std::clamp((k == 0 ? base.r : k == 1 ? base.g : base.b) + jitter, 0, 255);
    }
  }

  SyntheticWound out{RgbImage(params.width, params.height),
                     ClassMap{params.width, params.height, {}}};
  out.truth.classes.resize(static_cast<size_t>(params.width) * params.height);
  for (int y = 0; y < params.height; ++y) {
    for (int x = 0; x < params.width; ++x) {
      const double dx = (x + 0.5 - cx) / ax, dy = (y + 0.5 - cy) / ay;
      const double d = std::hypot(dx, dy);
      TissueClass c = TissueClass::kNotWound;
      if (d < inner) {
        c = TissueClass::kGranulation;
        if (params.necrosis &&
            std::hypot((x + 0.5 - nx) / ax, (y + 0.5 - ny) / ay) < necrosis_r) {
          c = TissueClass::kNecrosis;
        }
      } else if (d < outer) {
        c = TissueClass::kFibrin;
      }
      out.truth.classes[static_cast<size_t>(y) * params.width + x] = c;
      const auto& t = tint[ClassCode(c)];
      auto channel = [&](int v) {
        const int d8 = params.noise > 0
                           ? static_cast<int>(rng.Index(2 * params.noise + 1)) - params.noise
                           : 0;
        return static_cast<uint8_t>(std::clamp(v + d8, 0, 255));
      };
      const uint8_t r = channel(t[0]);
      const uint8_t g = channel(t[1]);
      const uint8_t b = channel(t[2]);
      out.image.at(x, y) = {r, g, b};
    }
  }
  return out;
}

}  // namespace ulcerseg
