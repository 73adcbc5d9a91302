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

#include "ulcerseg/augment.hpp"

#include <gtest/gtest.h>

#include <set>

#include "generators.hpp"
#include "ulcerseg/error.hpp"

namespace ulcerseg {
namespace {

using testing::NoisyPatch;

Patch RandomPatch(Rng& rng, int side) {
  Patch p = NoisyPatch(rng, side, {128, 128, 128}, 127);
  for (auto& m : p.mask) m = rng.Index(2);
  p.mask[0] = 1;
  return p;
}

TEST(Augment, DefaultPolicyQuadruplesTheDataset) {
  const AugmentPolicy policy;
  EXPECT_EQ(policy.transforms.size(), 7u);
  EXPECT_EQ(policy.variants_per_instance, 3);
  EXPECT_EQ(AugmentedCount(44893, policy), 179572u);

  Rng rng(1);
  const Patch base = RandomPatch(rng, 8);
  size_t produced = 0;
  ForEachAugmented(
      44893,
      [&](size_t i) { return LabeledPatch{base, static_cast<TissueClass>(i % 4)}; }, policy,
      [&](const LabeledPatch&) { ++produced; });
  EXPECT_EQ(produced, 179572u);
}

TEST(Augment, FlipsAreInvolutions) {
  Rng rng(2);
  for (int side : {1, 2, 7, 8, 32}) {
    const Patch p = RandomPatch(rng, side);
    EXPECT_EQ(ApplyTransform(ApplyTransform(p, AugmentTransform::kFlipH), AugmentTransform::kFlipH), p);
    EXPECT_EQ(ApplyTransform(ApplyTransform(p, AugmentTransform::kFlipV), AugmentTransform::kFlipV), p);
  }
}

TEST(Augment, RotationComposition) {
  Rng rng(3);
  for (int side : {1, 3, 8, 15}) {
    const Patch p = RandomPatch(rng, side);
    const Patch r90 = ApplyTransform(p, AugmentTransform::kRot90);
    EXPECT_EQ(ApplyTransform(r90, AugmentTransform::kRot90), ApplyTransform(p, AugmentTransform::kRot180));
    EXPECT_EQ(ApplyTransform(r90, AugmentTransform::kRot270), p);
    EXPECT_EQ(ApplyTransform(ApplyTransform(p, AugmentTransform::kRot270), AugmentTransform::kRot90), p);
  }
}

TEST(Augment, Rot90IsClockwise) {
  Patch p;
  p.width = p.height = 2;
  p.pixels = {{1, 0, 0}, {2, 0, 0}, {3, 0, 0}, {4, 0, 0}};
  p.mask = {1, 1, 1, 1};
  const Patch r = ApplyTransform(p, AugmentTransform::kRot90);
  // 1 2      3 1
  // 3 4  ->  4 2
  EXPECT_EQ(r.pixels[0].r, 3);
  EXPECT_EQ(r.pixels[1].r, 1);
  EXPECT_EQ(r.pixels[2].r, 4);
  EXPECT_EQ(r.pixels[3].r, 2);
}

TEST(Augment, ConstantPatchStaysConstant) {
  Rng rng(4);
  Patch p = NoisyPatch(rng, 16, {90, 160, 30}, 0);
  for (int i = 0; i <= static_cast<int>(AugmentTransform::kZoomOut); ++i) {
    const auto t = static_cast<AugmentTransform>(i);
    const Patch out = ApplyTransform(p, t);
    EXPECT_EQ(out.pixels, p.pixels) << TransformName(t);
    EXPECT_EQ(out.width, 16);
    EXPECT_EQ(out.height, 16);
  }
  for (const auto& v : AugmentPatch(p, AugmentPolicy{}, 17)) EXPECT_EQ(v.pixels, p.pixels);
}

TEST(Augment, ZoomKeepsSizeAndCenter) {
  Rng rng(5);
  const Patch p = RandomPatch(rng, 20);
  for (auto t : {AugmentTransform::kZoomIn, AugmentTransform::kZoomOut}) {
    const Patch z = ApplyTransform(p, t);
    EXPECT_EQ(z.width, 20);
    EXPECT_EQ(z.pixels.size(), p.pixels.size());
    EXPECT_NO_THROW(ValidatePatch(z));
  }
  // Zooming out pads the border with the mask mean.
  const Patch out = ApplyTransform(p, AugmentTransform::kZoomOut);
  EXPECT_EQ(out.at(0, 0), MaskMeanColor(p));
  EXPECT_FALSE(out.in_mask(0, 0));
}

TEST(Augment, SelectionIsDeterministicWithoutReplacement) {
  AugmentPolicy policy;
  policy.seed = 42;
  std::set<AugmentTransform> used;
  for (uint64_t i = 0; i < 200; ++i) {
    const auto a = SelectTransforms(policy, i);
    EXPECT_EQ(a, SelectTransforms(policy, i));
    ASSERT_EQ(a.size(), 3u);
    EXPECT_EQ(std::set<AugmentTransform>(a.begin(), a.end()).size(), 3u);
    used.insert(a.begin(), a.end());
  }
  EXPECT_EQ(used.size(), 7u);
  policy.seed = 43;
  int differ = 0;
  AugmentPolicy other;
  other.seed = 42;
  for (uint64_t i = 0; i < 50; ++i) differ += SelectTransforms(policy, i) != SelectTransforms(other, i);
  EXPECT_GT(differ, 0);
}

TEST(Augment, OriginalComesFirstAndVariantsMatch) {
  Rng rng(6);
  const Patch p = RandomPatch(rng, 12);
  const AugmentPolicy policy;
  const auto all = AugmentPatch(p, policy, 9);
  ASSERT_EQ(all.size(), 4u);
  EXPECT_EQ(all[0], p);
  for (int v = 0; v < 4; ++v) EXPECT_EQ(AugmentVariant(p, policy, 9, v), all[v]);
}

TEST(Augment, SourceStreamsAllVariants) {
  Rng rng(7);
  std::vector<LabeledPatch> patches;
  for (int i = 0; i < 5; ++i) patches.push_back({RandomPatch(rng, 8), static_cast<TissueClass>(i % 4)});
  const AugmentedSource source(patches, AugmentPolicy{});
  ASSERT_EQ(source.size(), 20u);
  std::vector<double> input(3 * 64);
  for (size_t i = 0; i < source.size(); ++i) {
    EXPECT_EQ(source.Get(i, input), static_cast<int>(i / 4) % 4);
    EXPECT_EQ(input, PatchToInput(AugmentVariant(patches[i / 4].patch, AugmentPolicy{}, i / 4,
                                                 static_cast<int>(i % 4))));
  }
}

TEST(Augment, RejectsBadInput) {
  AugmentPolicy policy;
  policy.variants_per_instance = 8;
  EXPECT_THROW(SelectTransforms(policy, 0), InvalidArgument);
  policy.variants_per_instance = -1;
  EXPECT_THROW(ValidateAugmentPolicy(policy), InvalidArgument);
  Patch rect;
  rect.width = 3;
  rect.height = 2;
  rect.pixels.resize(6);
  rect.mask.assign(6, 1);
  EXPECT_THROW(ApplyTransform(rect, AugmentTransform::kFlipH), InvalidArgument);
  EXPECT_EQ(ParseTransform("zoom_out"), AugmentTransform::kZoomOut);
  EXPECT_THROW(ParseTransform("shear"), InvalidArgument);
}

}  // namespace
}  // namespace ulcerseg
