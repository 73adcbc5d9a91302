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

// Superpixel-driven segmentation: partition an image, classify every
// superpixel, fuse the labels into a pixel mask and quantify tissue areas.

#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ulcerseg/classifiers.hpp"
#include "ulcerseg/imagecore.hpp"
#include "ulcerseg/mpeg7.hpp"
#include "ulcerseg/neural.hpp"
#include "ulcerseg/partition.hpp"
#include "ulcerseg/pca.hpp"
#include "ulcerseg/slic.hpp"

namespace ulcerseg {

// Side of the square crop that descriptors are computed on.
inline constexpr int kDescriptorPatchSize = 32;

// A trained model together with the recipe that turns a superpixel into
// its input: descriptor (+ optional PCA) for classic models, a resampled
// patch for networks.
struct SegmentationModel {
  enum class Kind { kClassic, kNetwork };
  Kind kind = Kind::kClassic;

  DescriptorKind descriptor = DescriptorKind::kColorLayout;
  int patch_size = kDescriptorPatchSize;
  std::optional<PcaModel> pca;
  ClassifierModel classifier;

  NetworkModel network;
};

SegmentationModel MakeClassicModel(DescriptorKind descriptor, std::optional<PcaModel> pca,
                                   ClassifierModel classifier,
                                   int patch_size = kDescriptorPatchSize);
SegmentationModel MakeNetworkModel(NetworkModel network);

// Throws ConfigurationError when the stages disagree on dimensions
// (descriptor vs PCA, PCA output vs classifier, network outputs != 4).
void ValidateSegmentationModel(const SegmentationModel& model);

// Classic bundles are JSON; network models use the binary network format.
// Deserialization detects the format from the leading bytes.
std::string SerializeSegmentationModel(const SegmentationModel& model);
SegmentationModel DeserializeSegmentationModel(const std::string& bytes);

// Descriptor of superpixel `id` on a patch_size crop.
FeatureVector SuperpixelDescriptor(const RgbImage& image, const SuperpixelPartition& partition,
                                   int id, DescriptorKind descriptor,
                                   int patch_size = kDescriptorPatchSize);

Prediction ClassifySuperpixel(const SegmentationModel& model, const RgbImage& image,
                              const SuperpixelPartition& partition, int id);

struct SegmentationResult {
  SuperpixelPartition partition;
  std::vector<TissueClass> superpixel_labels;
  std::vector<std::array<double, kNumTissueClasses>> superpixel_scores;
  ClassMap fused_mask;
};

// fused[p] = labels[partition.labels[p]].
ClassMap FuseMask(const SuperpixelPartition& partition, const std::vector<TissueClass>& labels);

SegmentationResult SegmentPartition(const RgbImage& image, SuperpixelPartition partition,
                                    const SegmentationModel& model);
SegmentationResult SegmentImage(const RgbImage& image, const SegmentationModel& model,
                                const SlicParams& params = {});

// Majority reference class of every superpixel, ties to the lowest code.
std::vector<TissueClass> SuperpixelMajority(const SuperpixelPartition& partition,
                                            const ClassMap& reference);

// One patch per superpixel labeled with its majority reference class.
std::vector<LabeledPatch> LabeledSuperpixelPatches(const RgbImage& image,
                                                   const SuperpixelPartition& partition,
                                                   const ClassMap& reference, int patch_size);

struct AreaReport {
  int64_t total_pixels = 0;
  std::array<int64_t, kNumTissueClasses> counts{};
  std::array<double, kNumTissueClasses> ratios{};
  int64_t wound_pixels = 0;
  double wound_ratio = 0.0;
};

AreaReport QuantifyAreas(const ClassMap& mask);
AreaReport QuantifyAreas(const SegmentationResult& result);
std::string AreaReportToJson(const AreaReport& report);

struct MaskErrorReport {
  double pixel_accuracy = 0.0;
  // Unmatched pixels over reference wound pixels; empty when the reference
  // has no wound pixels.
  std::optional<double> mae_ratio;
  int64_t mismatches = 0;
  int64_t reference_wound_pixels = 0;
};

// Throws InvalidArgument on a size mismatch.
MaskErrorReport MaskError(const ClassMap& predicted, const ClassMap& reference);
// The ratio, or NumericError when it is undefined.
double MaeRatio(const MaskErrorReport& report);

// Per-class intersection over union; NaN when the class is absent from
// both masks.
std::array<double, kNumTissueClasses> ClassIou(const ClassMap& predicted,
                                               const ClassMap& reference);

}  // namespace ulcerseg
