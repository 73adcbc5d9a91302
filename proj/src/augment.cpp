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

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ulcerseg/error.hpp"
#include "ulcerseg/random.hpp"

namespace ulcerseg {
namespace {

template <typename Map>
Patch Permute(const Patch& patch, Map source_of) {
  const int n = patch.width;
  Patch out = patch;
  for (int y = 0; y < n; ++y) {
    for (int x = 0; x < n; ++x) {
      const auto [sx, sy] = source_of(x, y, n);
      const size_t dst = static_cast<size_t>(y) * n + x;
      const size_t src = static_cast<size_t>(sy) * n + sx;
      out.pixels[dst] = patch.pixels[src];
      out.mask[dst] = patch.mask[src];
    }
  }
  return out;
}

Patch Zoom(const Patch& patch, double factor) {
  const int n = patch.width;
  const Rgb8 fill = MaskMeanColor(patch);
  Patch out = patch;
  const double half = n / 2.0;
  auto source = [&](int i) { return (i + 0.5 - half) / factor + half - 0.5; };
  auto channel = [](const Rgb8& p, int c) { return c == 0 ? p.r : (c == 1 ? p.g : p.b); };
  bool any_mask = false;
  for (int y = 0; y < n; ++y) {
    const double v = source(y);
    for (int x = 0; x < n; ++x) {
      const double u = source(x);
      const size_t dst = static_cast<size_t>(y) * n + x;
      if (u < -0.5 || u > n - 0.5 || v < -0.5 || v > n - 0.5) {
        out.pixels[dst] = fill;
        out.mask[dst] = 0;
        continue;
      }
      const double uc = std::clamp(u, 0.0, n - 1.0);
      const double vc = std::clamp(v, 0.0, n - 1.0);
      const int x0 = std::min(static_cast<int>(uc), n - 1);
      const int y0 = std::min(static_cast<int>(vc), n - 1);
      const int x1 = std::min(x0 + 1, n - 1);
      const int y1 = std::min(y0 + 1, n - 1);
      const double fx = uc - x0;
      const double fy = vc - y0;
      uint8_t rgb[3];
      for (int c = 0; c < 3; ++c) {
        const double top = channel(patch.at(x0, y0), c) * (1 - fx) + channel(patch.at(x1, y0), c) * fx;
        const double bottom =
            channel(patch.at(x0, y1), c) * (1 - fx) + channel(patch.at(x1, y1), c) * fx;
        rgb[c] = static_cast<uint8_t>(
            std::clamp(std::lround(top * (1 - fy) + bottom * fy), 0L, 255L));
      }
      out.pixels[dst] = {rgb[0], rgb[1], rgb[2]};
      const int nx = std::clamp(static_cast<int>(std::lround(u)), 0, n - 1);
      const int ny = std::clamp(static_cast<int>(std::lround(v)), 0, n - 1);
      out.mask[dst] = patch.mask[static_cast<size_t>(ny) * n + nx];
      any_mask |= out.mask[dst] != 0;
    }
  }
  if (!any_mask) out.mask[static_cast<size_t>(n / 2) * n + n / 2] = 1;
  return out;
}

}  // namespace

const char* TransformName(AugmentTransform t) {
  switch (t) {
    case AugmentTransform::kRot90:
      return "rot90";
    case AugmentTransform::kRot180:
      return "rot180";
    case AugmentTransform::kRot270:
      return "rot270";
    case AugmentTransform::kFlipH:
      return "flip_h";
    case AugmentTransform::kFlipV:
      return "flip_v";
    case AugmentTransform::kZoomIn:
      return "zoom_in";
    case AugmentTransform::kZoomOut:
      return "zoom_out";
  }
  return "rot90";
}

AugmentTransform ParseTransform(std::string_view name) {
  for (int i = 0; i <= static_cast<int>(AugmentTransform::kZoomOut); ++i) {
    const auto t = static_cast<AugmentTransform>(i);
    if (name == TransformName(t)) return t;
  }
  throw InvalidArgument("unknown transform '" + std::string(name) + "'");
}

void ValidateAugmentPolicy(const AugmentPolicy& policy) {
  if (policy.variants_per_instance < 0) {
    throw InvalidArgument("variants_per_instance must be >= 0");
  }
  if (static_cast<size_t>(policy.variants_per_instance) > policy.transforms.size()) {
    throw InvalidArgument("variants_per_instance " +
                          std::to_string(policy.variants_per_instance) +
                          " exceeds the transform pool size " +
                          std::to_string(policy.transforms.size()));
  }
}

Patch ApplyTransform(const Patch& patch, AugmentTransform t) {
  ValidatePatch(patch);
  if (patch.width != patch.height) {
    throw InvalidArgument("augmentation needs a square patch, got " +
                          std::to_string(patch.width) + "x" + std::to_string(patch.height));
  }
  using P = std::pair<int, int>;
  switch (t) {
    case AugmentTransform::kRot90:
      return Permute(patch, [](int x, int y, int n) { return P{y, n - 1 - x}; });
    case AugmentTransform::kRot180:
      return Permute(patch, [](int x, int y, int n) { return P{n - 1 - x, n - 1 - y}; });
    case AugmentTransform::kRot270:
      return Permute(patch, [](int x, int y, int n) { return P{n - 1 - y, x}; });
    case AugmentTransform::kFlipH:
      return Permute(patch, [](int x, int y, int n) { return P{n - 1 - x, y}; });
    case AugmentTransform::kFlipV:
      return Permute(patch, [](int x, int y, int n) { return P{x, n - 1 - y}; });
    case AugmentTransform::kZoomIn:
      return Zoom(patch, kZoomInFactor);
    case AugmentTransform::kZoomOut:
      return Zoom(patch, kZoomOutFactor);
  }
  return patch;
}

std::vector<AugmentTransform> SelectTransforms(const AugmentPolicy& policy,
                                               uint64_t instance_index) {
  ValidateAugmentPolicy(policy);
  std::vector<size_t> order(policy.transforms.size());
  std::iota(order.begin(), order.end(), size_t{0});
  Rng rng(MixSeed(policy.seed, instance_index));
  std::vector<AugmentTransform> out;
  for (int i = 0; i < policy.variants_per_instance; ++i) {
    const size_t j = i + rng.Index(order.size() - i);
    std::swap(order[i], order[j]);
    out.push_back(policy.transforms[order[i]]);
  }
  return out;
}

std::vector<Patch> AugmentPatch(const Patch& patch, const AugmentPolicy& policy,
                                uint64_t instance_index) {
  std::vector<Patch> out{patch};
  for (auto t : SelectTransforms(policy, instance_index)) out.push_back(ApplyTransform(patch, t));
  return out;
}

Patch AugmentVariant(const Patch& patch, const AugmentPolicy& policy,
                     uint64_t instance_index, int variant) {
  if (variant < 0 || variant > policy.variants_per_instance) {
    throw InvalidArgument("variant " + std::to_string(variant) + " outside [0, " +
                          std::to_string(policy.variants_per_instance) + "]");
  }
  if (variant == 0) return patch;
  return ApplyTransform(patch, SelectTransforms(policy, instance_index)[variant - 1]);
}

void ForEachAugmented(size_t count, const std::function<LabeledPatch(size_t)>& fetch,
                      const AugmentPolicy& policy,
                      const std::function<void(const LabeledPatch&)>& visit) {
  ValidateAugmentPolicy(policy);
  for (size_t i = 0; i < count; ++i) {
    const LabeledPatch input = fetch(i);
    visit(input);
    for (auto t : SelectTransforms(policy, i)) {
      visit(LabeledPatch{ApplyTransform(input.patch, t), input.label});
    }
  }
}

AugmentedSource::AugmentedSource(const std::vector<LabeledPatch>& patches,
                                 AugmentPolicy policy)
    : patches_(patches), policy_(std::move(policy)) {
  ValidateAugmentPolicy(policy_);
}

int AugmentedSource::Get(size_t index, std::span<double> input) const {
  const size_t per = 1 + static_cast<size_t>(policy_.variants_per_instance);
  const LabeledPatch& item = patches_.at(index / per);
  const int variant = static_cast<int>(index % per);
  if (variant == 0) {
    PatchToInput(item.patch, input);
  } else {
    PatchToInput(AugmentVariant(item.patch, policy_, index / per, variant), input);
  }
  return ClassCode(item.label);
}

}  // namespace ulcerseg
