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

#include "ulcerseg/pipeline.hpp"

#include <cmath>
#include <limits>

#include "json.hpp"
#include "ulcerseg/error.hpp"
#include "ulcerseg/parallel.hpp"

namespace ulcerseg {
namespace {

constexpr std::string_view kNetworkMagic = "ULSGNET1";

// Length of the model input after the feature stages.
int ClassicInputDim(const SegmentationModel& model) {
  const int raw = DescriptorDim(model.descriptor);
  if (raw == 0) {
    throw ConfigurationError("classic models need a raw descriptor (cld, csd or scd), got " +
                             std::string(DescriptorName(model.descriptor)));
  }
  if (!model.pca) return raw;
  if (model.pca->dim() != raw) {
    throw ConfigurationError("PCA model expects " + std::to_string(model.pca->dim()) +
                             " features but descriptor " + DescriptorName(model.descriptor) +
                             " yields " + std::to_string(raw));
  }
  return model.pca->retained;
}

std::vector<double> ClassicInput(const SegmentationModel& model, const Patch& patch) {
  FeatureVector v = Extract(patch, model.descriptor);
  if (model.pca) return Transform(*model.pca, v.values);
  return std::move(v.values);
}

}  // namespace

SegmentationModel MakeClassicModel(DescriptorKind descriptor, std::optional<PcaModel> pca,
                                   ClassifierModel classifier, int patch_size) {
  SegmentationModel m;
  m.kind = SegmentationModel::Kind::kClassic;
  m.descriptor = descriptor;
  m.pca = std::move(pca);
  m.classifier = std::move(classifier);
  m.patch_size = patch_size;
  ValidateSegmentationModel(m);
  return m;
}

SegmentationModel MakeNetworkModel(NetworkModel network) {
  SegmentationModel m;
  m.kind = SegmentationModel::Kind::kNetwork;
  m.network = std::move(network);
  m.patch_size = m.network.spec.input_size;
  ValidateSegmentationModel(m);
  return m;
}

void ValidateSegmentationModel(const SegmentationModel& model) {
  if (model.kind == SegmentationModel::Kind::kNetwork) {
    ValidateNetworkSpec(model.network.spec);
    if (model.network.spec.outputs() != kNumTissueClasses) {
      throw ConfigurationError("network has " + std::to_string(model.network.spec.outputs()) +
                               " outputs, segmentation needs " +
                               std::to_string(kNumTissueClasses));
    }
    if (model.network.spec.input_channels != 3) {
      throw ConfigurationError("network expects " +
                               std::to_string(model.network.spec.input_channels) +
                               " input channels, patches have 3");
    }
    return;
  }
  if (model.patch_size < 8) throw ConfigurationError("descriptor patch size must be >= 8");
  const int input = ClassicInputDim(model);
  if (model.classifier.dim != input) {
    throw ConfigurationError("classifier expects " + std::to_string(model.classifier.dim) +
                             " features but the feature path yields " + std::to_string(input));
  }
}

std::string SerializeSegmentationModel(const SegmentationModel& model) {
  ValidateSegmentationModel(model);
  if (model.kind == SegmentationModel::Kind::kNetwork) return SerializeNetwork(model.network);
  nlohmann::json j;
  j["type"] = "segmentation";
  j["descriptor"] = DescriptorName(model.descriptor);
  j["patch_size"] = model.patch_size;
  j["pca"] = model.pca ? nlohmann::json::parse(PcaToJson(*model.pca)) : nlohmann::json(nullptr);
  j["classifier"] = nlohmann::json::parse(ClassifierToJson(model.classifier));
  return j.dump(1) + "\n";
}

SegmentationModel DeserializeSegmentationModel(const std::string& bytes) {
  if (bytes.starts_with(kNetworkMagic)) return MakeNetworkModel(DeserializeNetwork(bytes));
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(bytes);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("model file is neither a network nor JSON: ") + e.what());
  }
  const std::string type = j.is_object() ? j.value("type", "") : "";
  if (type == "classifier") {
    throw ConfigurationError(
        "bare classifier file has no feature path; train with --descriptor to get a bundle");
  }
  if (type != "segmentation") throw DataError("model JSON has type '" + type + "'");
  try {
    std::optional<PcaModel> pca;
    if (!j.at("pca").is_null()) pca = PcaFromJson(j.at("pca").dump());
    return MakeClassicModel(ParseDescriptor(j.at("descriptor").get<std::string>()),
                            std::move(pca), ClassifierFromJson(j.at("classifier").dump()),
                            j.at("patch_size").get<int>());
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed segmentation model: ") + e.what());
  }
}

FeatureVector SuperpixelDescriptor(const RgbImage& image, const SuperpixelPartition& partition,
                                   int id, DescriptorKind descriptor, int patch_size) {
  return Extract(CropPatch(image, partition, id, patch_size), descriptor);
}

Prediction ClassifySuperpixel(const SegmentationModel& model, const RgbImage& image,
                              const SuperpixelPartition& partition, int id) {
  ValidateSegmentationModel(model);
  const Patch patch = CropPatch(image, partition, id, model.patch_size);
  if (model.kind == SegmentationModel::Kind::kNetwork) return Predict(model.network, patch);
  return PredictClassifier(model.classifier, ClassicInput(model, patch));
}

ClassMap FuseMask(const SuperpixelPartition& partition, const std::vector<TissueClass>& labels) {
  if (labels.size() != static_cast<size_t>(partition.count)) {
    throw InvalidArgument("label count " + std::to_string(labels.size()) +
                          " differs from superpixel count " + std::to_string(partition.count));
  }
  ClassMap mask{partition.width, partition.height, {}};
  mask.classes.reserve(partition.labels.size());
  for (int32_t id : partition.labels) {
    if (id < 0 || id >= partition.count) {
      throw InvalidArgument("partition label " + std::to_string(id) + " out of range");
    }
    mask.classes.push_back(labels[id]);
  }
  return mask;
}

SegmentationResult SegmentPartition(const RgbImage& image, SuperpixelPartition partition,
                                    const SegmentationModel& model) {
  ValidateSegmentationModel(model);
  const auto patches = CropPatches(image, partition, model.patch_size);
  const size_t n = patches.size();
  SegmentationResult result;
  result.superpixel_labels.resize(n);
  result.superpixel_scores.resize(n);
  if (model.kind == SegmentationModel::Kind::kNetwork) {
    const size_t dim = static_cast<size_t>(InputDim(model.network.spec));
    std::vector<double> inputs(n * dim);
    ParallelFor(n, [&](size_t i) {
      PatchToInput(patches[i], std::span<double>(inputs).subspan(i * dim, dim));
    });
    const auto scores = PredictScoresBatch(model.network, inputs, n);
    for (size_t i = 0; i < n; ++i) {
      std::array<double, kNumTissueClasses> row{};
      std::copy(scores[i].begin(), scores[i].end(), row.begin());
      const Prediction p = FromScores(row);
      result.superpixel_labels[i] = p.label;
      result.superpixel_scores[i] = p.scores;
    }
  } else {
    ParallelFor(n, [&](size_t i) {
      const Prediction p = PredictClassifier(model.classifier, ClassicInput(model, patches[i]));
      result.superpixel_labels[i] = p.label;
      result.superpixel_scores[i] = p.scores;
    });
  }
  result.fused_mask = FuseMask(partition, result.superpixel_labels);
  result.partition = std::move(partition);
  return result;
}

SegmentationResult SegmentImage(const RgbImage& image, const SegmentationModel& model,
                                const SlicParams& params) {
  ValidateSegmentationModel(model);
  return SegmentPartition(image, Partition(image, params), model);
}

std::vector<TissueClass> SuperpixelMajority(const SuperpixelPartition& partition,
                                            const ClassMap& reference) {
  if (reference.width != partition.width || reference.height != partition.height) {
    throw InvalidArgument("reference mask and partition dimensions differ");
  }
  std::vector<std::array<int64_t, kNumTissueClasses>> votes(partition.count);
  for (size_t p = 0; p < partition.labels.size(); ++p) {
    ++votes[partition.labels[p]][ClassCode(reference.classes[p])];
  }
  std::vector<TissueClass> out;
  for (const auto& v : votes) {
    out.push_back(ClassFromCode(static_cast<int>(std::max_element(v.begin(), v.end()) - v.begin())));
  }
  return out;
}

std::vector<LabeledPatch> LabeledSuperpixelPatches(const RgbImage& image,
                                                   const SuperpixelPartition& partition,
                                                   const ClassMap& reference, int patch_size) {
  const auto labels = SuperpixelMajority(partition, reference);
  auto patches = CropPatches(image, partition, patch_size);
  std::vector<LabeledPatch> out;
  out.reserve(patches.size());
  for (size_t i = 0; i < patches.size(); ++i) out.push_back({std::move(patches[i]), labels[i]});
  return out;
}

AreaReport QuantifyAreas(const ClassMap& mask) {
  AreaReport r;
  r.total_pixels = static_cast<int64_t>(mask.classes.size());
  if (r.total_pixels == 0) throw InvalidArgument("empty mask");
  for (TissueClass c : mask.classes) ++r.counts[ClassCode(c)];
  for (int c = 0; c < kNumTissueClasses; ++c) {
    r.ratios[c] = static_cast<double>(r.counts[c]) / static_cast<double>(r.total_pixels);
  }
  r.wound_pixels = r.total_pixels - r.counts[ClassCode(TissueClass::kNotWound)];
  r.wound_ratio = static_cast<double>(r.wound_pixels) / static_cast<double>(r.total_pixels);
  return r;
}

AreaReport QuantifyAreas(const SegmentationResult& result) {
  return QuantifyAreas(result.fused_mask);
}

std::string AreaReportToJson(const AreaReport& r) {
  nlohmann::json classes = nlohmann::json::object();
  for (int c = 0; c < kNumTissueClasses; ++c) {
    classes[ClassName(static_cast<TissueClass>(c))] = {{"pixels", r.counts[c]},
                                                       {"ratio", r.ratios[c]}};
  }
  nlohmann::json j = {{"total_pixels", r.total_pixels},
                      {"wound_pixels", r.wound_pixels},
                      {"wound_ratio", r.wound_ratio},
                      {"classes", classes}};
  return j.dump(2) + "\n";
}

MaskErrorReport MaskError(const ClassMap& predicted, const ClassMap& reference) {
  if (predicted.width != reference.width || predicted.height != reference.height ||
      predicted.classes.size() != reference.classes.size()) {
    throw InvalidArgument("mask sizes differ: " + std::to_string(predicted.width) + "x" +
                          std::to_string(predicted.height) + " vs " +
                          std::to_string(reference.width) + "x" +
                          std::to_string(reference.height));
  }
  if (reference.classes.empty()) throw InvalidArgument("empty masks");
  MaskErrorReport r;
  for (size_t i = 0; i < reference.classes.size(); ++i) {
    r.mismatches += predicted.classes[i] != reference.classes[i];
    r.reference_wound_pixels += reference.classes[i] != TissueClass::kNotWound;
  }
  const double total = static_cast<double>(reference.classes.size());
  r.pixel_accuracy = (total - static_cast<double>(r.mismatches)) / total;
  if (r.reference_wound_pixels > 0) {
    r.mae_ratio = static_cast<double>(r.mismatches) / static_cast<double>(r.reference_wound_pixels);
  }
  return r;
}

double MaeRatio(const MaskErrorReport& report) {
  if (!report.mae_ratio) {
    throw NumericError("mae ratio undefined: reference mask has no wound pixels");
  }
  return *report.mae_ratio;
}

std::array<double, kNumTissueClasses> ClassIou(const ClassMap& predicted,
                                               const ClassMap& reference) {
  if (predicted.classes.size() != reference.classes.size() ||
      predicted.width != reference.width) {
    throw InvalidArgument("mask sizes differ");
  }
  std::array<int64_t, kNumTissueClasses> inter{}, uni{};
  for (size_t i = 0; i < reference.classes.size(); ++i) {
    const int p = ClassCode(predicted.classes[i]);
    const int r = ClassCode(reference.classes[i]);
    if (p == r) {
      ++inter[p];
      ++uni[p];
    } else {
      ++uni[p];
      ++uni[r];
    }
  }
  std::array<double, kNumTissueClasses> out{};
  for (int c = 0; c < kNumTissueClasses; ++c) {
    out[c] = uni[c] > 0 ? static_cast<double>(inter[c]) / static_cast<double>(uni[c])
                        : std::numeric_limits<double>::quiet_NaN();
  }
  return out;
}

}  // namespace ulcerseg
