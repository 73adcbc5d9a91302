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

// Geometric data augmentation of square superpixel patches: right-angle
// rotations, mirroring and +-20% zoom, with a deterministic per-instance
// choice of variants.

#pragma once

#include <cstdint>
#include <functional>
#include <string_view>
#include <vector>

#include "ulcerseg/imagecore.hpp"
#include "ulcerseg/neural.hpp"

namespace ulcerseg {

enum class AugmentTransform { kRot90, kRot180, kRot270, kFlipH, kFlipV, kZoomIn, kZoomOut };

const char* TransformName(AugmentTransform t);
AugmentTransform ParseTransform(std::string_view name);

inline constexpr double kZoomInFactor = 1.2;
inline constexpr double kZoomOutFactor = 0.8;

struct AugmentPolicy {
  std::vector<AugmentTransform> transforms = {
      AugmentTransform::kRot90,  AugmentTransform::kRot180, AugmentTransform::kRot270,
      AugmentTransform::kFlipH,  AugmentTransform::kFlipV,  AugmentTransform::kZoomIn,
      AugmentTransform::kZoomOut};
  int variants_per_instance = 3;
  uint64_t seed = 1;
};

// Throws InvalidArgument for a negative variant count or more variants than
// transforms in the pool.
void ValidateAugmentPolicy(const AugmentPolicy& policy);

// Rotations are clockwise. Rotations and flips permute pixels exactly; zoom
// resamples bilinearly about the center, padding with the mask mean color
// when zooming out. Throws InvalidArgument for a non-square patch.
Patch ApplyTransform(const Patch& patch, AugmentTransform t);

// The variants drawn for one instance, without replacement, keyed on
// (seed, instance_index).
std::vector<AugmentTransform> SelectTransforms(const AugmentPolicy& policy,
                                               uint64_t instance_index);

// Original first, then the selected variants.
std::vector<Patch> AugmentPatch(const Patch& patch, const AugmentPolicy& policy,
                                uint64_t instance_index);

// Output `variant` of an instance (0 = original), without building the
// others.
Patch AugmentVariant(const Patch& patch, const AugmentPolicy& policy,
                     uint64_t instance_index, int variant);

inline size_t AugmentedCount(size_t inputs, const AugmentPolicy& policy) {
  return inputs * (1 + static_cast<size_t>(policy.variants_per_instance));
}

// Streams every augmented patch of `count` inputs to `visit`, fetching
// input i through `fetch(i)`. Only one patch is held at a time.
void ForEachAugmented(size_t count, const std::function<LabeledPatch(size_t)>& fetch,
                      const AugmentPolicy& policy,
                      const std::function<void(const LabeledPatch&)>& visit);

// Training samples generated on demand: sample i is variant
// i % (1 + variants) of input i / (1 + variants); the target is the class
// code.
class AugmentedSource : public SampleSource {
 public:
  AugmentedSource(const std::vector<LabeledPatch>& patches, AugmentPolicy policy);

  size_t size() const override { return AugmentedCount(patches_.size(), policy_); }
  int Get(size_t index, std::span<double> input) const override;

 private:
  const std::vector<LabeledPatch>& patches_;
  AugmentPolicy policy_;
};

}  // namespace ulcerseg
