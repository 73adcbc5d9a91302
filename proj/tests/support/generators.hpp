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

// Random inputs shared by unit and acceptance tests.

#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "ulcerseg/imagecore.hpp"
#include "ulcerseg/random.hpp"

namespace ulcerseg::testing {

enum class ImageKind { kNoise, kSmooth, kBlocks };

inline Rgb8 RandomColor(Rng& rng) {
  return {static_cast<uint8_t>(rng.Index(256)),
          static_cast<uint8_t>(rng.Index(256)),
          static_cast<uint8_t>(rng.Index(256))};
}

// kNoise: independent uniform pixels. kSmooth: a sum of a few random
// Gaussian color blobs. kBlocks: random axis-aligned rectangles painted
// over a random background.
inline RgbImage RandomImage(Rng& rng, int width, int height, ImageKind kind) {
  RgbImage image(width, height);
  switch (kind) {
    case ImageKind::kNoise:
      for (auto& p : image.pixels()) p = RandomColor(rng);
      break;
    case ImageKind::kSmooth: {
      struct Blob {
        double x, y, sigma, r, g, b;
      };
      std::vector<Blob> blobs(4);
      for (auto& blob : blobs) {
        blob = {rng.Uniform(0, width), rng.Uniform(0, height),
                rng.Uniform(0.15, 0.5) * std::max(width, height),
                rng.Uniform(-120, 120), rng.Uniform(-120, 120),
                rng.Uniform(-120, 120)};
      }
      for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
          double c[3] = {128, 128, 128};
          for (const auto& blob : blobs) {
            const double d2 = (x - blob.x) * (x - blob.x) + (y - blob.y) * (y - blob.y);
            const double wgt = std::exp(-d2 / (2 * blob.sigma * blob.sigma));
            c[0] += blob.r * wgt;
            c[1] += blob.g * wgt;
            c[2] += blob.b * wgt;
          }
          auto clamp8 = [](double v) {
            return static_cast<uint8_t>(std::lround(std::clamp(v, 0.0, 255.0)));
          };
          image.at(x, y) = {clamp8(c[0]), clamp8(c[1]), clamp8(c[2])};
        }
      }
      break;
    }
    case ImageKind::kBlocks: {
      const Rgb8 background = RandomColor(rng);
      for (auto& p : image.pixels()) p = background;
      const int blocks = 3 + static_cast<int>(rng.Index(6));
      for (int i = 0; i < blocks; ++i) {
        const int x0 = static_cast<int>(rng.Index(width));
        const int y0 = static_cast<int>(rng.Index(height));
        const int bw = 1 + static_cast<int>(rng.Index(width / 2 + 1));
        const int bh = 1 + static_cast<int>(rng.Index(height / 2 + 1));
        const Rgb8 color = RandomColor(rng);
        for (int y = y0; y < std::min(height, y0 + bh); ++y) {
          for (int x = x0; x < std::min(width, x0 + bw); ++x) {
            image.at(x, y) = color;
          }
        }
      }
      break;
    }
  }
  return image;
}

// Adds independent uniform noise in [-amplitude, amplitude] per channel.
inline RgbImage AddNoise(Rng& rng, RgbImage image, int amplitude) {
  auto jitter = [&](uint8_t v) {
    const int d = static_cast<int>(rng.Index(2 * amplitude + 1)) - amplitude;
    return static_cast<uint8_t>(std::clamp(v + d, 0, 255));
  };
  for (auto& p : image.pixels()) p = {jitter(p.r), jitter(p.g), jitter(p.b)};
  return image;
}

// Square patch of `base` with per-channel uniform noise, fully masked.
inline Patch NoisyPatch(Rng& rng, int side, Rgb8 base, int amplitude) {
  RgbImage image = AddNoise(rng, RgbImage(side, side, base), amplitude);
  Patch patch;
  patch.width = side;
  patch.height = side;
  patch.pixels = image.pixels();
  patch.mask.assign(static_cast<size_t>(side) * side, 1);
  return patch;
}

// Dominant colors of the four tissue classes in synthetic data.
inline constexpr Rgb8 kSyntheticColors[kNumTissueClasses] = {
    {222, 172, 140}, {196, 36, 48}, {232, 204, 70}, {48, 40, 36}};

}  // namespace ulcerseg::testing
