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

// Baseline classifiers over feature vectors: random forest, 1-NN with L1
// or L2 distance, Gaussian naive Bayes and a two-hidden-layer perceptron.

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ulcerseg/imagecore.hpp"
#include "ulcerseg/mpeg7.hpp"
#include "ulcerseg/neural.hpp"

namespace ulcerseg {

enum class ClassifierFamily { kRandomForest, kKnnL1, kKnnL2, kGaussianNb, kMlp };

// "rf", "knn-l1", "knn-l2", "gnb", "mlp".
const char* FamilyName(ClassifierFamily family);
ClassifierFamily ParseFamily(std::string_view name);

struct TrainingSet {
  std::vector<std::vector<double>> features;
  std::vector<TissueClass> labels;

  size_t size() const { return features.size(); }
  int dim() const { return features.empty() ? 0 : static_cast<int>(features.front().size()); }
};

TrainingSet ToTrainingSet(const FeatureTable& table);

struct ClassifierSpec {
  ClassifierFamily family = ClassifierFamily::kRandomForest;
  uint64_t seed = 1;

  // Random forest.
  int trees = 10;
  // Features examined per split; 0 means ceil(sqrt(dim)).
  int features_per_split = 0;
  // Train each tree on n draws with replacement.
  bool bootstrap = true;

  // k-NN.
  int neighbors = 1;

  // MLP: two ReLU hidden layers of this width on standardized inputs.
  int hidden_units = 64;
  TrainConfig mlp;
};

// Throws InvalidArgument when a hyperparameter is out of range.
void ValidateClassifierSpec(const ClassifierSpec& spec);

struct TreeNode {
  // -1 for a leaf.
  int feature = -1;
  // Go left when x[feature] <= threshold.
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  TissueClass label = TissueClass::kNotWound;

  friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

struct DecisionTree {
  std::vector<TreeNode> nodes;

  TissueClass Classify(std::span<const double> x) const;
  int depth() const;
};

struct ClassifierModel {
  ClassifierSpec spec;
  int dim = 0;
  // Classes present in training, ascending by code.
  std::vector<TissueClass> classes;

  std::vector<DecisionTree> trees;

  std::vector<std::vector<double>> exemplars;
  std::vector<TissueClass> exemplar_labels;

  // Per entry of `classes`.
  std::vector<std::vector<double>> means;
  std::vector<std::vector<double>> variances;
  std::vector<double> log_priors;

  std::vector<double> input_mean;
  std::vector<double> input_scale;
  NetworkModel network;
};

// Throws InvalidArgument for an empty set, ragged or non-finite rows,
// mismatched label count or a bad spec.
ClassifierModel TrainClassifier(const ClassifierSpec& spec, const TrainingSet& data);

// Scores indexed by class code; classes unseen in training score 0.
// Throws InvalidArgument on a dimension mismatch.
Prediction PredictClassifier(const ClassifierModel& model, std::span<const double> x);

// Grows one unpruned tree with Gini splits on the given rows (indices into
// data). Exposed for tests and reuse.
DecisionTree GrowTree(const TrainingSet& data, std::vector<int> rows,
                      int features_per_split, uint64_t seed);

std::string ClassifierToJson(const ClassifierModel& model);
// Throws DataError on malformed input.
ClassifierModel ClassifierFromJson(const std::string& text);

}  // namespace ulcerseg
