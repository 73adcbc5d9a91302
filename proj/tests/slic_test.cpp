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

#include "ulcerseg/slic.hpp"

#include <algorithm>
#include <set>

#include "generators.hpp"
#include "gtest/gtest.h"
#include "slic_reference.hpp"
#include "ulcerseg/error.hpp"

namespace ulcerseg {
namespace {

using testing::ImageKind;
using testing::RandomImage;

TEST(Slic, ConstantImageGivesTwentyTwoSuperpixels) {
  const RgbImage image(110, 110, Rgb8{128, 128, 128});
  const SuperpixelPartition part = Partition(image);
  EXPECT_EQ(CheckPartition(part), "");
  ASSERT_EQ(part.count, 22);
  int64_t lo = part.sizes[0], hi = part.sizes[0];
  for (int64_t size : part.sizes) {
    lo = std::min(lo, size);
    hi = std::max(hi, size);
  }
  RecordProperty("min_size", static_cast<int>(lo));
  RecordProperty("max_size", static_cast<int>(hi));
}

TEST(Slic, SeedCountForTypicalUlcerImage) {
  // 2,035,255 / 550 = 3700.46.
  EXPECT_EQ(SeedCount(1747, 1165, 550), 3700);
  const RgbImage image(1747, 1165, Rgb8{200, 150, 120});
  const auto seeds = InitialSeeds(ToLab(image), 1747, 1165, SlicParams{});
  EXPECT_EQ(seeds.size(), 3700u);
}

TEST(Slic, TwoColorHalvesAreNeverMixed) {
  RgbImage image(64, 64);
  for (int y = 0; y < 64; ++y) {
    for (int x = 0; x < 64; ++x) {
      image.at(x, y) = x < 32 ? Rgb8{255, 0, 0} : Rgb8{0, 0, 255};
    }
  }
  const SuperpixelPartition part = Partition(image);
  ASSERT_EQ(CheckPartition(part), "");
  std::vector<std::set<bool>> sides(part.count);
  for (int y = 0; y < 64; ++y) {
    for (int x = 0; x < 64; ++x) sides[part.label_at(x, y)].insert(x < 32);
  }
  for (int i = 0; i < part.count; ++i) {
    EXPECT_EQ(sides[i].size(), 1u) << "superpixel " << i;
  }
}

TEST(Slic, MatchesBruteForceReference) {
  Rng rng(7);
  const SlicParams params;
  for (int trial = 0; trial < 6; ++trial) {
    const auto kind = static_cast<ImageKind>(trial % 3);
    const RgbImage image = RandomImage(rng, 64, 64, kind);
    const SuperpixelPartition part = Partition(image, params);
    const auto seeds = InitialSeeds(ToLab(image), 64, 64, params);
    const auto reference = testing::ReferenceSlic(image, seeds, params);
    EXPECT_EQ(part.labels, reference) << "trial " << trial;
    EXPECT_DOUBLE_EQ(testing::BoundaryRecall(reference, part.labels, 64, 64), 1.0);
  }
}

TEST(Slic, InvariantsHoldOnRandomImages) {
  Rng rng(11);
  for (int trial = 0; trial < 24; ++trial) {
    const int w = 96 + static_cast<int>(rng.Index(129));
    const int h = 96 + static_cast<int>(rng.Index(129));
    const auto kind = trial % 2 ? ImageKind::kSmooth : ImageKind::kBlocks;
    const RgbImage image = testing::AddNoise(rng, RandomImage(rng, w, h, kind), 5);
    const SuperpixelPartition part = Partition(image);
    ASSERT_EQ(CheckPartition(part), "") << "trial " << trial;
    const int k = SeedCount(w, h, 550);
    EXPECT_LE(std::abs(part.count - k), 0.2 * k)
        << "trial " << trial << " " << w << "x" << h << " count " << part.count;
  }
}

TEST(Slic, Deterministic) {
  Rng rng(3);
  const RgbImage image = RandomImage(rng, 96, 80, ImageKind::kSmooth);
  EXPECT_EQ(Partition(image).labels, Partition(image).labels);
}

TEST(Slic, RejectsImageSmallerThanOneSuperpixel) {
  const RgbImage image(20, 20);
  EXPECT_THROW(Partition(image), InvalidArgument);
  SlicParams bad;
  bad.compactness = 0.0;
  EXPECT_THROW(Partition(RgbImage(64, 64), bad), InvalidArgument);
  bad = {};
  bad.target_size = 8;
  EXPECT_THROW(Partition(RgbImage(64, 64), bad), InvalidArgument);
}

TEST(Slic, ConnectivityEnforcementSplitsDisjointFragments) {
  // Label 0 appears as two large separate blocks; label 1 has a 1-pixel
  // island inside label 0.
  std::vector<int32_t> labels = {0, 0, 1, 0, 0,  //
                                 0, 0, 1, 0, 0,  //
                                 0, 0, 1, 0, 0,  //
                                 0, 0, 1, 0, 1};
  const int count = EnforceConnectivity(labels, 5, 4, 2.0);
  EXPECT_EQ(count, 3);
  EXPECT_EQ(labels, (std::vector<int32_t>{0, 0, 1, 2, 2,  //
                                          0, 0, 1, 2, 2,  //
                                          0, 0, 1, 2, 2,  //
                                          0, 0, 1, 2, 2}));
}

}  // namespace
}  // namespace ulcerseg
