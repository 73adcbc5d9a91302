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

#include "ulcerseg/imagecore.hpp"

#include <cmath>

#include "gtest/gtest.h"
#include "ulcerseg/error.hpp"
#include "ulcerseg/partition.hpp"
#include "ulcerseg/slic.hpp"

namespace ulcerseg {
namespace {

ColorTriple Rgb(double r, double g, double b) {
  return {r, g, b, ColorSpace::kRgb8};
}

TEST(ConvertColor, WhiteIsLabReference) {
  const ColorTriple lab = ConvertColor(Rgb(255, 255, 255), ColorSpace::kCieLab);
  EXPECT_EQ(lab.space, ColorSpace::kCieLab);
  EXPECT_NEAR(lab.c0, 100.0, 1e-3);
  EXPECT_NEAR(lab.c1, 0.0, 1e-3);
  EXPECT_NEAR(lab.c2, 0.0, 1e-3);
}

TEST(ConvertColor, PureRedHsv) {
  const ColorTriple hsv = ConvertColor(Rgb(255, 0, 0), ColorSpace::kHsv);
  EXPECT_DOUBLE_EQ(hsv.c0, 0.0);
  EXPECT_DOUBLE_EQ(hsv.c1, 1.0);
  EXPECT_DOUBLE_EQ(hsv.c2, 1.0);
}

TEST(ConvertColor, BlackYCbCr) {
  const ColorTriple ycc = ConvertColor(Rgb(0, 0, 0), ColorSpace::kYCbCr);
  EXPECT_DOUBLE_EQ(ycc.c0, 0.0);
  EXPECT_DOUBLE_EQ(ycc.c1, 128.0);
  EXPECT_DOUBLE_EQ(ycc.c2, 128.0);
}

TEST(ConvertColor, HmmdOfMixedColor) {
  const ColorTriple hmmd = ConvertColor(Rgb(200, 100, 50), ColorSpace::kHmmd);
  EXPECT_NEAR(hmmd.c0, 20.0, 1e-12);  // hue = 60 * (100 - 50) / 150
  EXPECT_DOUBLE_EQ(hmmd.c1, 150.0);
  EXPECT_DOUBLE_EQ(hmmd.c2, 125.0);
}

TEST(ConvertColor, LabRoundTripOnLattice) {
  for (int r = 0; r < 256; r += 17) {
    for (int g = 0; g < 256; g += 17) {
      for (int b = 0; b < 256; b += 17) {
        const auto lab = RgbToLab(r, g, b);
        const auto back = LabToRgb(lab[0], lab[1], lab[2]);
        EXPECT_NEAR(back[0], r, 1.0);
        EXPECT_NEAR(back[1], g, 1.0);
        EXPECT_NEAR(back[2], b, 1.0);
      }
    }
  }
}

TEST(ConvertColor, GrayHasNoSaturation) {
  for (int v = 0; v < 256; v += 5) {
    EXPECT_EQ(ConvertColor(Rgb(v, v, v), ColorSpace::kHsv).c1, 0.0);
    EXPECT_EQ(ConvertColor(Rgb(v, v, v), ColorSpace::kHmmd).c1, 0.0);
  }
}

TEST(ConvertColor, RejectsBadInputs) {
  EXPECT_THROW(ConvertColor(Rgb(0, 0, 0), static_cast<ColorSpace>(42)),
               InvalidArgument);
  EXPECT_THROW(ConvertColor({1, 2, 3, ColorSpace::kHsv}, ColorSpace::kCieLab),
               InvalidArgument);
  EXPECT_THROW(ConvertColor(Rgb(256, 0, 0), ColorSpace::kHsv), InvalidArgument);
  EXPECT_THROW(ParseColorSpace("xyz"), InvalidArgument);
}

TEST(TissueClass, StableCodes) {
  EXPECT_EQ(ClassCode(TissueClass::kNotWound), 0);
  EXPECT_EQ(ClassCode(TissueClass::kGranulation), 1);
  EXPECT_EQ(ClassCode(TissueClass::kFibrin), 2);
  EXPECT_EQ(ClassCode(TissueClass::kNecrosis), 3);
  EXPECT_EQ(ParseClass("Granulation"), TissueClass::kGranulation);
  EXPECT_EQ(ParseClass("not wound"), TissueClass::kNotWound);
  EXPECT_EQ(ParseClass("3"), TissueClass::kNecrosis);
  EXPECT_FALSE(ParseClass("bone").has_value());
  EXPECT_THROW(ClassFromCode(4), InvalidArgument);
}

SuperpixelPartition SinglePartition(int w, int h) {
  SuperpixelPartition part;
  part.width = w;
  part.height = h;
  part.labels.assign(static_cast<size_t>(w) * h, 0);
  part.count = 1;
  part.sizes = {static_cast<int64_t>(w) * h};
  part.centroids.resize(1);
  return part;
}

TEST(CropPatch, WholeImageIsIdentity) {
  RgbImage image(32, 32);
  for (int y = 0; y < 32; ++y) {
    for (int x = 0; x < 32; ++x) {
      image.at(x, y) = {static_cast<uint8_t>(x * 8), static_cast<uint8_t>(y * 8), 77};
    }
  }
  const Patch patch = CropPatch(image, SinglePartition(32, 32), 0, 32);
  EXPECT_EQ(patch.width, 32);
  EXPECT_EQ(patch.height, 32);
  EXPECT_EQ(patch.pixels, image.pixels());
  for (uint8_t m : patch.mask) EXPECT_EQ(m, 1);
}

TEST(CropPatch, LShapeFillsWithMeanColor) {
  // Superpixel 1 is an L: left column and bottom row of a 10x10 box; the
  // L has two colors so its mean differs from both.
  RgbImage image(12, 12, Rgb8{0, 0, 0});
  SuperpixelPartition part = SinglePartition(12, 12);
  part.count = 2;
  part.sizes = {0, 0};
  part.centroids.resize(2);
  for (int y = 0; y < 10; ++y) {
    for (int x = 0; x < 10; ++x) {
      if (x == 0 || y == 9) {
        part.labels[static_cast<size_t>(y) * 12 + x] = 1;
        image.at(x, y) = x == 0 ? Rgb8{200, 0, 0} : Rgb8{0, 0, 200};
      }
    }
  }
  const Patch patch = CropPatch(image, part, 1, 10);
  // 10 red pixels on the column, 9 blue on the row (corner counted red).
  const Rgb8 mean{static_cast<uint8_t>(std::lround(2000.0 / 19)), 0,
                  static_cast<uint8_t>(std::lround(1800.0 / 19))};
  for (int y = 0; y < 10; ++y) {
    for (int x = 0; x < 10; ++x) {
      if (!patch.in_mask(x, y)) EXPECT_EQ(patch.at(x, y), mean);
    }
  }
  EXPECT_EQ(MaskMeanColor(patch), mean);
}

TEST(CropPatch, ResizesToRequestedSide) {
  RgbImage image(40, 40, Rgb8{10, 20, 30});
  SuperpixelPartition part = SinglePartition(40, 40);
  part.count = 2;
  part.sizes = {0, 0};
  part.centroids.resize(2);
  for (int y = 5; y < 25; ++y) {
    for (int x = 3; x < 13; ++x) part.labels[static_cast<size_t>(y) * 40 + x] = 1;
  }
  const Patch patch = CropPatch(image, part, 1, 32);
  EXPECT_EQ(patch.width, 32);
  EXPECT_EQ(patch.height, 32);
  EXPECT_EQ(patch.pixels.size(), 32u * 32u);
  EXPECT_NO_THROW(ValidatePatch(patch));
  EXPECT_EQ(CropPatch(image, part, 1, 32), patch);
}

TEST(CropPatch, BatchedCropMatchesSingleCrops) {
  RgbImage image(40, 30);
  for (int y = 0; y < 30; ++y)
    for (int x = 0; x < 40; ++x)
      image.at(x, y) = {static_cast<uint8_t>(6 * x), static_cast<uint8_t>(8 * y),
                        static_cast<uint8_t>((x * y) % 256)};
  const SuperpixelPartition part = Partition(image, {.target_size = 100});
  const auto patches = CropPatches(image, part, 12);
  ASSERT_EQ(patches.size(), static_cast<size_t>(part.count));
  for (int id = 0; id < part.count; ++id) EXPECT_EQ(patches[id], CropPatch(image, part, id, 12));
}

TEST(CropPatch, Errors) {
  const RgbImage image(16, 16);
  const auto part = SinglePartition(16, 16);
  EXPECT_THROW(CropPatch(image, part, 3, 16), NotFound);
  EXPECT_THROW(CropPatch(image, part, 0, 4), InvalidArgument);
}

}  // namespace
}  // namespace ulcerseg
