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

#include "ulcerseg/cli.hpp"

#include <cmath>
#include <filesystem>
#include <map>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "ulcerseg/augment.hpp"
#include "ulcerseg/classifiers.hpp"
#include "ulcerseg/dataset.hpp"
#include "ulcerseg/evaluation.hpp"
#include "ulcerseg/image_io.hpp"
#include "ulcerseg/mpeg7.hpp"
#include "ulcerseg/neural.hpp"
#include "ulcerseg/pca.hpp"
#include "ulcerseg/pipeline.hpp"
#include "ulcerseg/random.hpp"
#include "ulcerseg/slic.hpp"
#include "ulcerseg/synthetic.hpp"
#include "ulcerseg/text.hpp"

namespace ulcerseg {
namespace fs = std::filesystem;
namespace {

using json = nlohmann::json;

void AddSlicOptions(CLI::App* cmd, SlicParams& p) {
  cmd->add_option("--target-size", p.target_size, "Mean pixels per superpixel")
      ->capture_default_str();
  cmd->add_option("--compactness", p.compactness, "SLIC spatial weight")->capture_default_str();
  cmd->add_option("--max-iters", p.max_iters, "SLIC iterations")->capture_default_str();
}

struct ModelOptions {
  std::string family;
  ClassifierSpec classifier;
  TrainConfig train;
  int input_size = 32;
  std::string backbone = FormatLayers(DefaultBackbone());
  int head_width = 512;
  int augment_variants = 3;
  double val_fraction = 0.1;
  std::string descriptor = "cld";
  int patch_size = kDescriptorPatchSize;
  std::string criterion;
  CLI::Option* patience_option = nullptr;
};

void AddModelOptions(CLI::App* cmd, ModelOptions& m) {
  cmd->add_option("--seed", m.train.seed, "Seed for every random stream")->capture_default_str();
  cmd->add_option("--trees", m.classifier.trees, "Random forest size")->capture_default_str();
  cmd->add_option("--features-per-split", m.classifier.features_per_split,
                  "Features examined per split (0 = sqrt)")
      ->capture_default_str();
  cmd->add_option("--bootstrap", m.classifier.bootstrap, "Bootstrap tree samples")
      ->capture_default_str();
  cmd->add_option("--neighbors", m.classifier.neighbors, "k of k-NN")->capture_default_str();
  cmd->add_option("--hidden-units", m.classifier.hidden_units, "MLP hidden width")
      ->capture_default_str();
  cmd->add_option("--lr", m.train.learning_rate, "SGD learning rate")->capture_default_str();
  cmd->add_option("--momentum", m.train.momentum, "SGD momentum")->capture_default_str();
  cmd->add_option("--batch", m.train.batch_size, "Mini-batch size")->capture_default_str();
  cmd->add_option("--max-epochs", m.train.max_epochs, "Epoch cap")->capture_default_str();
  m.patience_option =
      cmd->add_option("--patience", m.train.patience, "Early-stopping patience (<= max epochs)")
          ->capture_default_str();
  cmd->add_option("--min-delta", m.train.min_delta, "Minimum validation improvement")
      ->capture_default_str();
  cmd->add_option("--input-size", m.input_size, "CNN patch side")->capture_default_str();
  cmd->add_option("--backbone", m.backbone, "CNN backbone layers")->capture_default_str();
  cmd->add_option("--head-width", m.head_width, "Width of the two hidden dense layers")
      ->capture_default_str();
  cmd->add_option("--augment-variants", m.augment_variants,
                  "Augmented copies per training patch (0 = off)")
      ->capture_default_str();
  cmd->add_option("--val-fraction", m.val_fraction, "CNN validation share per class")
      ->capture_default_str();
  cmd->add_option("--descriptor", m.descriptor, "cld, csd or scd for dataset inputs")
      ->capture_default_str();
  cmd->add_option("--patch-size", m.patch_size, "Descriptor crop side")->capture_default_str();
  cmd->add_option("--criterion", m.criterion, "Fit PCA inline: kg, sp[:t] or fixed:k");
}

bool IsCnn(const ModelOptions& m) { return m.family == "cnn"; }

// An unset patience follows a lowered epoch cap.
void ApplyDefaults(ModelOptions& m) {
  if (m.patience_option && m.patience_option->count() == 0) {
    m.train.patience = std::min(m.train.patience, m.train.max_epochs);
  }
}

ClassifierSpec ResolveClassifier(const ModelOptions& m) {
  ClassifierSpec spec = m.classifier;
  spec.family = ParseFamily(m.family);
  spec.seed = m.train.seed;
  spec.mlp = m.train;
  ValidateClassifierSpec(spec);
  return spec;
}

NetworkSpec ResolveNetwork(const ModelOptions& m) {
  NetworkSpec spec = QtduSpec(m.input_size, ParseLayers(m.backbone), m.head_width);
  ValidateNetworkSpec(spec);
  ValidateTrainConfig(m.train);
  if (m.augment_variants < 0) throw InvalidArgument("--augment-variants must be >= 0");
  if (!(m.val_fraction >= 0.0 && m.val_fraction < 1.0)) {
    throw InvalidArgument("--val-fraction must be in [0, 1)");
  }
  return spec;
}

json TrainConfigJson(const TrainConfig& c) {
  return {{"learning_rate", c.learning_rate}, {"momentum", c.momentum},
          {"batch_size", c.batch_size},       {"max_epochs", c.max_epochs},
          {"patience", c.patience},           {"min_delta", c.min_delta},
          {"seed", c.seed}};
}

// Also validates the options.
json ModelConfigJson(const ModelOptions& m) {
  json j;
  j["model"] = m.family;
  if (IsCnn(m)) {
    const NetworkSpec spec = ResolveNetwork(m);
    j["train"] = TrainConfigJson(m.train);
    j["network"] = {{"input_size", spec.input_size},
                    {"backbone", FormatLayers(spec.backbone)},
                    {"head", FormatLayers(spec.head)}};
    j["augment_variants"] = m.augment_variants;
    j["val_fraction"] = m.val_fraction;
  } else {
    const ClassifierSpec spec = ResolveClassifier(m);
    j["seed"] = spec.seed;
    switch (spec.family) {
      case ClassifierFamily::kRandomForest:
        j["trees"] = spec.trees;
        j["features_per_split"] = spec.features_per_split;
        j["bootstrap"] = spec.bootstrap;
        break;
      case ClassifierFamily::kKnnL1:
      case ClassifierFamily::kKnnL2:
        j["neighbors"] = spec.neighbors;
        break;
      case ClassifierFamily::kGaussianNb:
        break;
      case ClassifierFamily::kMlp:
        j["hidden_units"] = spec.hidden_units;
        j["train"] = TrainConfigJson(spec.mlp);
        break;
    }
    j["descriptor"] = m.descriptor;
    j["patch_size"] = m.patch_size;
    if (!m.criterion.empty()) j["criterion"] = m.criterion;
  }
  return j;
}

bool IsDirectory(const std::string& path) { return fs::is_directory(fs::path(path)); }

FeatureTable ExtractDataset(const DatasetManifest& dataset, DescriptorKind kind, int patch_size,
                            const SlicParams& slic) {
  if (DescriptorDim(kind) == 0) throw InvalidArgument("extract needs cld, csd or scd");
  FeatureTable table;
  table.kind = kind;
  for (const auto& img : LoadLabeledImages(dataset, slic)) {
    const auto patches = CropPatches(img.pixels, img.partition, patch_size);
    for (const auto& row : img.labels) {
      table.rows.push_back({row.image_id, row.superpixel_id, row.label,
                            Extract(patches[row.superpixel_id], kind).values});
    }
  }
  return table;
}

struct PatchSet {
  std::vector<LabeledPatch> patches;
  std::vector<std::string> groups;
};

PatchSet DatasetPatches(const DatasetManifest& dataset, int size, const SlicParams& slic) {
  PatchSet set;
  for (const auto& img : LoadLabeledImages(dataset, slic)) {
    auto patches = CropPatches(img.pixels, img.partition, size);
    for (const auto& row : img.labels) {
      set.patches.push_back({patches[row.superpixel_id], row.label});
      set.groups.push_back(row.image_id);
    }
  }
  return set;
}

// Per-class validation share drawn with a seeded shuffle.
void SplitValidation(const std::vector<LabeledPatch>& all, double fraction, uint64_t seed,
                     std::vector<LabeledPatch>& train, std::vector<LabeledPatch>& val) {
  std::vector<std::vector<size_t>> by_class(kNumTissueClasses);
  for (size_t i = 0; i < all.size(); ++i) by_class[ClassCode(all[i].label)].push_back(i);
  std::vector<bool> is_val(all.size(), false);
  for (int c = 0; c < kNumTissueClasses; ++c) {
    auto& members = by_class[c];
    Rng rng(MixSeed(seed, 0x7a1ull + static_cast<uint64_t>(c)));
    rng.Shuffle(std::span<size_t>(members));
    size_t take = static_cast<size_t>(std::lround(fraction * static_cast<double>(members.size())));
    if (fraction > 0.0 && take == 0 && members.size() >= 2) take = 1;
    for (size_t i = 0; i < take; ++i) is_val[members[i]] = true;
  }
  for (size_t i = 0; i < all.size(); ++i) (is_val[i] ? val : train).push_back(all[i]);
}

NetworkModel TrainCnn(const ModelOptions& m, const std::vector<LabeledPatch>& patches) {
  const NetworkSpec spec = ResolveNetwork(m);
  std::vector<LabeledPatch> train, val;
  SplitValidation(patches, m.val_fraction, m.train.seed, train, val);
  if (train.empty()) throw DataError("no training patches");
  AugmentPolicy policy;
  policy.variants_per_instance = m.augment_variants;
  policy.seed = m.train.seed;
  AugmentPolicy plain;
  plain.variants_per_instance = 0;
  AugmentedSource train_source(train, policy);
  // Without a validation share, early stopping watches the training loss.
  AugmentedSource val_source(val.empty() ? train : val, plain);
  return Train(spec, m.train, train_source, val_source);
}

struct ClassicData {
  FeatureTable table;
  DescriptorKind descriptor = DescriptorKind::kColorLayout;
  std::optional<PcaModel> pca;
};

DescriptorKind DescriptorForDim(int dim) {
  for (auto kind : {DescriptorKind::kColorLayout, DescriptorKind::kColorStructure,
                    DescriptorKind::kScalableColor}) {
    if (DescriptorDim(kind) == dim) return kind;
  }
  throw ConfigurationError("PCA model dim " + std::to_string(dim) +
                           " matches no descriptor (12, 128 or 256)");
}

std::vector<std::vector<double>> Rows(const FeatureTable& t) {
  std::vector<std::vector<double>> rows;
  for (const auto& r : t.rows) rows.push_back(r.values);
  return rows;
}

// Features from a dataset directory or a features CSV, with an optional
// PCA model applied or fitted. `fit_pca` is false when PCA is fitted per
// fold by the caller.
ClassicData LoadClassic(const std::string& input, const ModelOptions& m, const std::string& pca_path,
                        const SlicParams& slic, bool fit_pca) {
  ClassicData d;
  if (IsDirectory(input)) {
    d.table = ExtractDataset(LoadDataset(input), ParseDescriptor(m.descriptor), m.patch_size, slic);
  } else {
    d.table = ParseFeatureCsv(ReadFile(input));
  }
  if (d.table.rows.empty()) throw DataError("no feature rows in '" + input + "'");
  const int dim = static_cast<int>(d.table.dim());
  if (!pca_path.empty()) {
    d.pca = PcaFromJson(ReadFile(pca_path));
    d.descriptor = DescriptorForDim(d.pca->dim());
    if (dim == d.pca->dim()) {
      for (auto& r : d.table.rows) r.values = Transform(*d.pca, r.values);
      d.table.kind = DescriptorKind::kPcaReduced;
    } else if (dim != d.pca->retained) {
      throw ConfigurationError("features have dim " + std::to_string(dim) + " but the PCA model takes " +
                               std::to_string(d.pca->dim()) + " and yields " +
                               std::to_string(d.pca->retained));
    }
    return d;
  }
  if (d.table.kind == DescriptorKind::kPcaReduced) {
    throw ConfigurationError("features have dim " + std::to_string(dim) +
                             ", which is no raw descriptor; pass --pca with the model that "
                             "produced them");
  }
  d.descriptor = d.table.kind;
  if (!m.criterion.empty() && fit_pca) {
    d.pca = FitPca(Rows(d.table), ParseCriterion(m.criterion));
    for (auto& r : d.table.rows) r.values = Transform(*d.pca, r.values);
    d.table.kind = DescriptorKind::kPcaReduced;
  }
  return d;
}

std::string ReducedPath(const std::string& model_path) {
  std::string stem = model_path;
  for (const char* suffix : {".json", ".pca"}) {
    if (stem.ends_with(suffix)) stem.resize(stem.size() - std::string(suffix).size());
  }
  return stem + ".reduced.csv";
}

void EnsureParent(const std::string& path) {
  const fs::path parent = fs::path(path).parent_path();
  if (!parent.empty()) fs::create_directories(parent);
}

void WriteText(const std::string& path, const std::string& text) {
  EnsureParent(path);
  WriteFileAtomic(path, text);
}

// Each command registers its options and a runner.
struct Command {
  CLI::App* app = nullptr;
  std::function<void()> run;
};

}  // namespace

int ExitCode(ErrorCategory category) {
  switch (category) {
    case ErrorCategory::kInvalidArgument:
    case ErrorCategory::kConfiguration:
      return 2;
    case ErrorCategory::kNotFound:
    case ErrorCategory::kData:
      return 3;
    case ErrorCategory::kTraining:
    case ErrorCategory::kNumeric:
      return 4;
  }
  return 4;
}

int RunCommand(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Superpixel-driven segmentation of skin-ulcer photographs", "ulcerseg"};
  app.set_config("--config", "", "INI file: [command] sections of key = value; flags override");
  app.fallthrough();
  app.require_subcommand(1);
  app.set_version_flag("--version", "ulcerseg 0.1.0");
  std::vector<Command> commands;

  // slic
  std::string slic_image, slic_out;
  SlicParams slic_params;
  {
    auto* c = app.add_subcommand("slic", "Partition an image into superpixels");
    c->add_option("image", slic_image, "PNG or JPEG image")->required();
    c->add_option("-o,--output", slic_out, "16-bit partition PNG")->required();
    AddSlicOptions(c, slic_params);
    commands.push_back({c, [&] {
      const auto part = Partition(ReadImage(slic_image), slic_params);
      EnsureParent(slic_out);
      WritePartitionPng(slic_out, part);
      out << "superpixels: " << part.count << "\n";
    }});
  }

  // extract
  std::string ex_dataset, ex_out, ex_descriptor = "cld";
  int ex_patch = kDescriptorPatchSize;
  SlicParams ex_slic;
  {
    auto* c = app.add_subcommand("extract", "Descriptor features of labeled superpixels");
    c->add_option("dataset", ex_dataset, "Dataset directory")->required();
    c->add_option("--descriptor", ex_descriptor, "cld, csd or scd")->capture_default_str();
    c->add_option("--patch-size", ex_patch, "Crop side")->capture_default_str();
    c->add_option("-o,--output", ex_out, "Features CSV")->required();
    AddSlicOptions(c, ex_slic);
    commands.push_back({c, [&] {
      const auto table =
          ExtractDataset(LoadDataset(ex_dataset), ParseDescriptor(ex_descriptor), ex_patch, ex_slic);
      WriteText(ex_out, FormatFeatureCsv(table));
      out << "rows: " << table.rows.size() << " dim: " << table.dim() << "\n";
    }});
  }

  // reduce
  std::string rd_in, rd_out, rd_reduced, rd_criterion = "kg";
  {
    auto* c = app.add_subcommand("reduce", "Fit PCA and project features");
    c->add_option("features", rd_in, "Features CSV")->required();
    c->add_option("--criterion", rd_criterion, "kg, sp[:threshold] or fixed:k")
        ->capture_default_str();
    c->add_option("-o,--output", rd_out, "PCA model JSON")->required();
    c->add_option("--reduced", rd_reduced, "Projected features CSV (default <model>.reduced.csv)");
    commands.push_back({c, [&] {
      FeatureTable table = ParseFeatureCsv(ReadFile(rd_in));
      if (table.rows.empty()) throw DataError("no feature rows in '" + rd_in + "'");
      const PcaModel pca = FitPca(Rows(table), ParseCriterion(rd_criterion));
      for (auto& r : table.rows) r.values = Transform(pca, r.values);
      table.kind = DescriptorKind::kPcaReduced;
      WriteText(rd_out, PcaToJson(pca));
      WriteText(rd_reduced.empty() ? ReducedPath(rd_out) : rd_reduced, FormatFeatureCsv(table));
      out << "retained: " << pca.retained << " of " << pca.dim() << "\n";
    }});
  }

  // train
  std::string tr_in, tr_out, tr_pca;
  bool tr_dry = false;
  ModelOptions tr_model;
  SlicParams tr_slic;
  {
    auto* c = app.add_subcommand("train", "Train a classifier bundle or a CNN");
    c->add_option("input", tr_in, "Dataset directory or features CSV")->required();
    c->add_option("--model", tr_model.family, "rf, knn-l1, knn-l2, gnb, mlp or cnn")->required();
    c->add_option("--pca", tr_pca, "PCA model the features pass through");
    c->add_option("-o,--output", tr_out, "Model file");
    c->add_flag("--dry-run", tr_dry, "Print the resolved configuration and stop");
    AddModelOptions(c, tr_model);
    AddSlicOptions(c, tr_slic);
    commands.push_back({c, [&] {
      ApplyDefaults(tr_model);
      out << ModelConfigJson(tr_model).dump(2) << "\n";
      if (tr_dry) return;
      if (tr_out.empty()) throw InvalidArgument("train needs -o/--output");
      if (IsCnn(tr_model)) {
        if (!IsDirectory(tr_in)) throw ConfigurationError("cnn training needs a dataset directory");
        const auto set = DatasetPatches(LoadDataset(tr_in), tr_model.input_size, tr_slic);
        const NetworkModel net = TrainCnn(tr_model, set.patches);
        WriteText(tr_out, SerializeSegmentationModel(MakeNetworkModel(net)));
        out << "epochs: " << net.history.size() << " best: " << net.best_epoch << "\n";
        return;
      }
      const ClassicData d = LoadClassic(tr_in, tr_model, tr_pca, tr_slic, true);
      const auto model = TrainClassifier(ResolveClassifier(tr_model), ToTrainingSet(d.table));
      WriteText(tr_out, SerializeSegmentationModel(
                            MakeClassicModel(d.descriptor, d.pca, model, tr_model.patch_size)));
      out << "instances: " << d.table.rows.size() << " dim: " << d.table.dim() << "\n";
    }});
  }

  // segment
  std::string sg_image, sg_model, sg_out, sg_report, sg_partition, sg_reference;
  SlicParams sg_slic;
  {
    auto* c = app.add_subcommand("segment", "Segment an image into a tissue mask");
    c->add_option("image", sg_image, "PNG or JPEG image")->required();
    c->add_option("--model", sg_model, "Model file from train")->required();
    c->add_option("-o,--output", sg_out, "Palette mask PNG")->required();
    c->add_option("--report", sg_report, "Area report JSON");
    c->add_option("--partition-out", sg_partition, "Also write the partition PNG");
    c->add_option("--reference", sg_reference, "Reference mask for pixel accuracy and MAE");
    AddSlicOptions(c, sg_slic);
    commands.push_back({c, [&] {
      const auto model = DeserializeSegmentationModel(ReadFile(sg_model));
      const auto image = ReadImage(sg_image);
      const auto result = SegmentImage(image, model, sg_slic);
      EnsureParent(sg_out);
      WriteMaskPng(sg_out, result.fused_mask);
      if (!sg_partition.empty()) {
        EnsureParent(sg_partition);
        WritePartitionPng(sg_partition, result.partition);
      }
      const AreaReport areas = QuantifyAreas(result);
      json report = json::parse(AreaReportToJson(areas));
      report["superpixels"] = result.partition.count;
      std::optional<MaskErrorReport> error;
      if (!sg_reference.empty()) {
        error = MaskError(result.fused_mask, ReadMaskPng(sg_reference));
        report["mask_error"] = {{"pixel_accuracy", error->pixel_accuracy},
                                {"mae_ratio", error->mae_ratio ? json(*error->mae_ratio) : json()},
                                {"mismatches", error->mismatches},
                                {"reference_wound_pixels", error->reference_wound_pixels}};
      }
      if (!sg_report.empty()) WriteText(sg_report, report.dump(2) + "\n");
      out << "superpixels: " << result.partition.count
          << " wound_ratio: " << FormatDouble(areas.wound_ratio) << "\n";
      if (error) {
        out << "pixel_accuracy: " << FormatDouble(error->pixel_accuracy) << "\n";
        out << "mae_ratio: " << FormatDouble(MaeRatio(*error)) << "\n";
      }
    }});
  }

  // evaluate
  std::string ev_in, ev_out, ev_pca, ev_predictions;
  int ev_folds = 10;
  bool ev_loio = false;
  ModelOptions ev_model;
  SlicParams ev_slic;
  {
    auto* c = app.add_subcommand("evaluate", "Cross-validate a model specification");
    c->add_option("input", ev_in, "Dataset directory or features CSV")->required();
    c->add_option("--model-spec", ev_model.family, "rf, knn-l1, knn-l2, gnb, mlp or cnn")
        ->required();
    c->add_option("--folds", ev_folds, "Stratified fold count")->capture_default_str();
    c->add_flag("--loio", ev_loio, "Leave one image out instead of k folds");
    c->add_option("--pca", ev_pca, "PCA model the features pass through");
    c->add_option("--predictions", ev_predictions, "Per-instance predictions CSV");
    c->add_option("-o,--output", ev_out, "Metrics JSON")->required();
    AddModelOptions(c, ev_model);
    AddSlicOptions(c, ev_slic);
    commands.push_back({c, [&] {
      ApplyDefaults(ev_model);
      ModelConfigJson(ev_model);
      std::vector<TissueClass> labels;
      std::vector<std::string> groups;
      CrossValidationReport report;
      auto folds_for = [&] {
        return ev_loio ? GroupFolds(groups) : StratifiedFolds(labels, ev_folds, ev_model.train.seed);
      };
      if (IsCnn(ev_model)) {
        if (!IsDirectory(ev_in)) throw ConfigurationError("cnn evaluation needs a dataset directory");
        const auto set = DatasetPatches(LoadDataset(ev_in), ev_model.input_size, ev_slic);
        for (const auto& p : set.patches) labels.push_back(p.label);
        groups = set.groups;
        report = CrossValidate(labels, folds_for(), [&](const auto& train, const auto& test) {
          std::vector<LabeledPatch> subset;
          for (size_t i : train) subset.push_back(set.patches[i]);
          const NetworkModel net = TrainCnn(ev_model, subset);
          std::vector<Prediction> preds;
          for (size_t i : test) preds.push_back(Predict(net, set.patches[i].patch));
          return preds;
        });
      } else {
        const ClassicData d = LoadClassic(ev_in, ev_model, ev_pca, ev_slic, false);
        const ClassifierSpec spec = ResolveClassifier(ev_model);
        const TrainingSet data = ToTrainingSet(d.table);
        labels = data.labels;
        for (const auto& r : d.table.rows) groups.push_back(r.image_id);
        const std::optional<PcaCriterion> criterion =
            ev_model.criterion.empty() || d.pca ? std::nullopt
                                                : std::optional(ParseCriterion(ev_model.criterion));
        // PCA, when requested, is fitted on each training split only.
        report = CrossValidate(labels, folds_for(), [&](const auto& train, const auto& test) {
          TrainingSet subset;
          for (size_t i : train) {
            subset.features.push_back(data.features[i]);
            subset.labels.push_back(data.labels[i]);
          }
          std::optional<PcaModel> pca;
          if (criterion) {
            pca = FitPca(subset.features, *criterion);
            for (auto& f : subset.features) f = Transform(*pca, f);
          }
          const ClassifierModel model = TrainClassifier(spec, subset);
          std::vector<Prediction> preds;
          for (size_t i : test) {
            preds.push_back(PredictClassifier(
                model, pca ? Transform(*pca, data.features[i]) : data.features[i]));
          }
          return preds;
        });
      }
      WriteText(ev_out, CrossValidationToJson(report));
      if (!ev_predictions.empty()) WriteText(ev_predictions, PredictionsToCsv(report));
      out << "folds: " << report.folds.size() << " kappa: " << FormatDouble(report.mean.kappa)
          << " +- " << FormatDouble(report.stddev.kappa) << "\n";
    }});
  }

  // ranktest
  std::string rk_in, rk_out;
  double rk_alpha = 0.05;
  {
    auto* c = app.add_subcommand("ranktest", "Friedman test with Nemenyi post-test");
    c->add_option("results", rk_in, "CSV: dataset,<method>,... one row per dataset")->required();
    c->add_option("--alpha", rk_alpha, "Significance level")->capture_default_str();
    c->add_option("-o,--output", rk_out, "Rank report JSON")->required();
    commands.push_back({c, [&] {
      const auto m = ParseResultsCsv(ReadFile(rk_in));
      const auto r = FriedmanNemenyi(m.values, rk_alpha, m.methods);
      WriteText(rk_out, RankTestToJson(r));
      out << "statistic: " << FormatDouble(r.statistic) << " p_value: " << FormatDouble(r.p_value)
          << "\n";
    }});
  }

  // synth
  std::string sy_dir;
  int sy_images = 10;
  uint64_t sy_seed = 1;
  SyntheticParams sy_params;
  SlicParams sy_slic;
  sy_slic.compactness = 20.0;
  {
    auto* c = app.add_subcommand("synth", "Write a synthetic wound dataset with known masks");
    c->add_option("output", sy_dir, "Dataset directory")->required();
    c->add_option("--images", sy_images, "Image count")->capture_default_str();
    c->add_option("--seed", sy_seed, "Generator seed")->capture_default_str();
    c->add_option("--width", sy_params.width, "Image width")->capture_default_str();
    c->add_option("--height", sy_params.height, "Image height")->capture_default_str();
    c->add_option("--noise", sy_params.noise, "Per-channel noise amplitude")->capture_default_str();
    c->add_option("--necrosis", sy_params.necrosis, "Add a necrotic island")->capture_default_str();
    AddSlicOptions(c, sy_slic);
    commands.push_back({c, [&] {
      if (sy_images < 1) throw InvalidArgument("--images must be >= 1");
      std::vector<DatasetImage> images;
      std::vector<LabelRow> labels;
      for (int i = 0; i < sy_images; ++i) {
        char id[32];
        std::snprintf(id, sizeof id, "synth%03d", i);
        const auto w = GenerateSyntheticWound(sy_params, MixSeed(sy_seed, static_cast<uint64_t>(i)));
        const auto part = Partition(w.image, sy_slic);
        DatasetImage entry{id, std::string("images/") + id + ".png",
                           std::string("partitions/") + id + ".png",
                           std::string("masks/") + id + ".png"};
        const fs::path root(sy_dir);
        fs::create_directories(root / "images");
        fs::create_directories(root / "partitions");
        fs::create_directories(root / "masks");
        WritePng((root / entry.image).string(), w.image);
        WritePartitionPng((root / entry.partition).string(), part);
        WriteMaskPng((root / entry.mask).string(), w.truth);
        const auto majority = SuperpixelMajority(part, w.truth);
        for (int s = 0; s < part.count; ++s) labels.push_back({id, s, majority[s]});
        images.push_back(std::move(entry));
      }
      WriteText((fs::path(sy_dir) / "images.csv").string(), FormatImagesCsv(images));
      WriteText((fs::path(sy_dir) / "labels.csv").string(), FormatLabelsCsv(labels));
      out << "images: " << images.size() << " superpixels: " << labels.size() << "\n";
    }});
  }

  std::vector<std::string> argv_store{"ulcerseg"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  for (const auto& a : argv_store) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::CallForVersion& e) {
    out << e.what() << "\n";
    return 0;
  } catch (const CLI::ParseError& e) {
    std::string detail = e.what();
    for (char& ch : detail) {
      if (ch == '\n') ch = ' ';
    }
    err << "error: usage: " << Trim(detail) << "\n";
    return 2;
  }
  try {
    for (const auto& cmd : commands) {
      if (cmd.app->parsed()) cmd.run();
    }
  } catch (const Error& e) {
    std::string detail = e.what();
    for (char& ch : detail) {
      if (ch == '\n') ch = ' ';
    }
    err << "error: " << CategoryName(e.category()) << ": " << detail << "\n";
    return ExitCode(e.category());
  } catch (const fs::filesystem_error& e) {
    err << "error: data: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    err << "error: internal: " << e.what() << "\n";
    return 4;
  }
  return 0;
}

}  // namespace ulcerseg
