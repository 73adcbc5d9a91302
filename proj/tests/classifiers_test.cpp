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

#include "ulcerseg/classifiers.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "classifier_oracles.hpp"
#include "ulcerseg/error.hpp"
#include "ulcerseg/random.hpp"

namespace ulcerseg {
namespace {

TrainingSet Blobs(Rng& rng, int per_class, const std::vector<std::vector<double>>& centers,
                  double sigma) {
  TrainingSet set;
  for (size_t c = 0; c < centers.size(); ++c) {
    for (int i = 0; i < per_class; ++i) {
      std::vector<double> x;
      for (double m : centers[c]) x.push_back(m + sigma * rng.Normal());
      set.features.push_back(x);
      set.labels.push_back(static_cast<TissueClass>(c));
    }
  }
  return set;
}

// Small grid-valued data so the tree sees many tied values.
TrainingSet GridData(Rng& rng, int rows, int dim, int classes) {
  TrainingSet set;
  for (int i = 0; i < rows; ++i) {
    std::vector<double> x(dim);
    for (auto& v : x) v = static_cast<double>(rng.Index(7)) * 0.5;
    set.features.push_back(x);
    set.labels.push_back(static_cast<TissueClass>(rng.Index(classes)));
  }
  return set;
}

ClassifierSpec Spec(ClassifierFamily family) {
  ClassifierSpec spec;
  spec.family = family;
  return spec;
}

const ClassifierFamily kAllFamilies[] = {
    ClassifierFamily::kRandomForest, ClassifierFamily::kKnnL1, ClassifierFamily::kKnnL2,
    ClassifierFamily::kGaussianNb, ClassifierFamily::kMlp};

ClassifierSpec QuickSpec(ClassifierFamily family) {
  ClassifierSpec spec = Spec(family);
  spec.mlp.max_epochs = 30;
  spec.mlp.patience = 30;
  spec.mlp.learning_rate = 0.05;
  return spec;
}

TEST(Classifiers, FamilyNames) {
  for (auto f : kAllFamilies) EXPECT_EQ(ParseFamily(FamilyName(f)), f);
  EXPECT_THROW(ParseFamily("svm"), InvalidArgument);
}

TEST(Classifiers, DefaultForest) {
  const ClassifierSpec spec;
  EXPECT_EQ(spec.family, ClassifierFamily::kRandomForest);
  EXPECT_EQ(spec.trees, 10);
  Rng rng(1);
  const auto data = Blobs(rng, 20, {{0, 0}, {5, 5}}, 1.0);
  EXPECT_EQ(TrainClassifier(spec, data).trees.size(), 10u);
}

TEST(Classifiers, SingleTreeMatchesExhaustiveOracle) {
  Rng rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    const int rows = 10 + static_cast<int>(rng.Index(41));
    const int dim = 1 + static_cast<int>(rng.Index(4));
    const TrainingSet data = GridData(rng, rows, dim, 2 + static_cast<int>(rng.Index(3)));
    ClassifierSpec spec;
    spec.trees = 1;
    spec.bootstrap = false;
    spec.features_per_split = dim;
    spec.seed = trial;
    const auto model = TrainClassifier(spec, data);
    std::vector<int> all(rows);
    std::iota(all.begin(), all.end(), 0);
    const testing::OracleTree oracle(data, all);
    EXPECT_EQ(static_cast<int>(model.trees[0].nodes.size()), oracle.Nodes()) << "trial " << trial;
    for (int q = 0; q < 200; ++q) {
      std::vector<double> x(dim);
      for (auto& v : x) v = rng.Uniform(-0.5, 3.5);
      const auto p = PredictClassifier(model, x);
      ASSERT_EQ(ClassCode(p.label), oracle.Classify(x)) << "trial " << trial;
      EXPECT_EQ(p.scores[ClassCode(p.label)], 1.0);
    }
  }
}

TEST(Classifiers, NaiveBayesMatchesBayesRule) {
  Rng rng(3);
  const TrainingSet data = Blobs(rng, 60, {{0, 0, 0}, {2, 1, 0}, {0, 2, 2}, {1, 1, 3}}, 1.0);
  const auto model = TrainClassifier(Spec(ClassifierFamily::kGaussianNb), data);
  for (int i = 0; i < 1000; ++i) {
    std::vector<double> x{rng.Uniform(-2, 4), rng.Uniform(-2, 4), rng.Uniform(-2, 5)};
    ASSERT_EQ(ClassCode(PredictClassifier(model, x).label), testing::BayesRule(data, x)) << i;
  }
}

TEST(Classifiers, NaiveBayesSeparatesDistantBlobs) {
  Rng rng(4);
  const TrainingSet train = Blobs(rng, 100, {{0, 0}, {10, 0}}, 1.0);
  const TrainingSet test = Blobs(rng, 100, {{0, 0}, {10, 0}}, 1.0);
  const auto model = TrainClassifier(Spec(ClassifierFamily::kGaussianNb), train);
  for (size_t i = 0; i < test.size(); ++i) {
    EXPECT_EQ(PredictClassifier(model, test.features[i]).label, test.labels[i]);
  }
}

TEST(Classifiers, KnnNormsDiffer) {
  TrainingSet data;
  data.features = {{0, 0}, {3, 0}};
  data.labels = {TissueClass::kGranulation, TissueClass::kFibrin};
  const auto l1 = TrainClassifier(Spec(ClassifierFamily::kKnnL1), data);
  const auto l2 = TrainClassifier(Spec(ClassifierFamily::kKnnL2), data);
  const std::vector<double> q1{1, 1.5}, q2{2, 2.5};
  EXPECT_EQ(PredictClassifier(l1, q1).label, TissueClass::kGranulation);
  EXPECT_EQ(PredictClassifier(l2, q1).label, TissueClass::kGranulation);
  EXPECT_EQ(PredictClassifier(l1, q2).label, TissueClass::kFibrin);
  // L2: sqrt(8.25) ~ 2.872 vs sqrt(7.25) ~ 2.693.
  EXPECT_EQ(PredictClassifier(l2, q2).label, TissueClass::kFibrin);
}

TEST(Classifiers, KnnSelfQuery) {
  Rng rng(5);
  const TrainingSet data = Blobs(rng, 15, {{0, 0}, {1, 1}, {2, 0}}, 0.8);
  for (auto f : {ClassifierFamily::kKnnL1, ClassifierFamily::kKnnL2}) {
    const auto model = TrainClassifier(Spec(f), data);
    for (size_t i = 0; i < data.size(); ++i) {
      const auto p = PredictClassifier(model, data.features[i]);
      EXPECT_EQ(p.label, data.labels[i]);
      EXPECT_EQ(p.scores[ClassCode(data.labels[i])], 1.0);
    }
  }
}

TEST(Classifiers, KnnPermutationInvariant) {
  Rng rng(6);
  TrainingSet data = GridData(rng, 40, 2, 4);
  ClassifierSpec spec = Spec(ClassifierFamily::kKnnL1);
  spec.neighbors = 3;
  const auto a = TrainClassifier(spec, data);
  std::vector<size_t> order(data.size());
  std::iota(order.begin(), order.end(), size_t{0});
  rng.Shuffle(std::span<size_t>(order));
  TrainingSet shuffled;
  for (size_t i : order) {
    shuffled.features.push_back(data.features[i]);
    shuffled.labels.push_back(data.labels[i]);
  }
  const auto b = TrainClassifier(spec, shuffled);
  for (int q = 0; q < 300; ++q) {
    std::vector<double> x{rng.Uniform(0, 3), rng.Uniform(0, 3)};
    EXPECT_EQ(PredictClassifier(a, x).scores, PredictClassifier(b, x).scores);
  }
}

TEST(Classifiers, SingleClassSet) {
  Rng rng(7);
  TrainingSet data = Blobs(rng, 12, {{1, 2, 3}}, 1.0);
  for (auto& l : data.labels) l = TissueClass::kNecrosis;
  for (auto f : kAllFamilies) {
    const auto model = TrainClassifier(QuickSpec(f), data);
    for (int q = 0; q < 20; ++q) {
      std::vector<double> x{rng.Uniform(-5, 5), rng.Uniform(-5, 5), rng.Uniform(-5, 5)};
      const auto p = PredictClassifier(model, x);
      EXPECT_EQ(p.label, TissueClass::kNecrosis) << FamilyName(f);
      EXPECT_DOUBLE_EQ(p.scores[3], 1.0) << FamilyName(f);
    }
  }
}

TEST(Classifiers, ScoresAreDistributionsAndArgmax) {
  Rng rng(8);
  const TrainingSet data = Blobs(rng, 25, {{0, 0}, {2, 2}, {0, 3}}, 1.2);
  for (auto f : kAllFamilies) {
    ClassifierSpec spec = QuickSpec(f);
    spec.neighbors = 5;
    const auto model = TrainClassifier(spec, data);
    for (int q = 0; q < 50; ++q) {
      std::vector<double> x{rng.Uniform(-2, 4), rng.Uniform(-2, 5)};
      const auto p = PredictClassifier(model, x);
      double sum = 0.0;
      for (double s : p.scores) {
        EXPECT_GE(s, 0.0);
        sum += s;
      }
      EXPECT_NEAR(sum, 1.0, 1e-6) << FamilyName(f);
      EXPECT_EQ(p.scores[3], 0.0) << "unseen class scored by " << FamilyName(f);
      EXPECT_EQ(p.label, FromScores(p.scores).label);
    }
  }
}

TEST(Classifiers, MlpLearnsBlobs) {
  Rng rng(9);
  const TrainingSet train = Blobs(rng, 60, {{0, 0, 0}, {4, 0, 0}, {0, 4, 0}, {0, 0, 4}}, 0.7);
  const TrainingSet test = Blobs(rng, 30, {{0, 0, 0}, {4, 0, 0}, {0, 4, 0}, {0, 0, 4}}, 0.7);
  ClassifierSpec spec = Spec(ClassifierFamily::kMlp);
  spec.mlp.max_epochs = 60;
  spec.mlp.patience = 10;
  spec.mlp.learning_rate = 0.01;
  const auto model = TrainClassifier(spec, train);
  int correct = 0;
  for (size_t i = 0; i < test.size(); ++i) {
    correct += PredictClassifier(model, test.features[i]).label == test.labels[i];
  }
  EXPECT_GE(correct / static_cast<double>(test.size()), 0.95);
}

TEST(Classifiers, DeterministicAndPersistent) {
  Rng rng(10);
  const TrainingSet data = Blobs(rng, 30, {{0, 0, 1}, {2, 2, 0}, {0, 3, 3}}, 1.0);
  for (auto f : kAllFamilies) {
    const auto a = TrainClassifier(QuickSpec(f), data);
    const auto b = TrainClassifier(QuickSpec(f), data);
    const std::string json = ClassifierToJson(a);
    EXPECT_EQ(json, ClassifierToJson(b)) << FamilyName(f);
    const auto back = ClassifierFromJson(json);
    EXPECT_EQ(ClassifierToJson(back), json) << FamilyName(f);
    for (int q = 0; q < 30; ++q) {
      std::vector<double> x{rng.Uniform(-2, 4), rng.Uniform(-2, 5), rng.Uniform(-2, 4)};
      EXPECT_EQ(PredictClassifier(a, x).scores, PredictClassifier(back, x).scores);
    }
  }
  EXPECT_THROW(ClassifierFromJson("{\"family\": \"rf\"}"), DataError);
  EXPECT_THROW(ClassifierFromJson("[1,2"), DataError);
}

TEST(Classifiers, RejectsBadInput) {
  EXPECT_THROW(TrainClassifier(Spec(ClassifierFamily::kGaussianNb), TrainingSet{}), InvalidArgument);
  TrainingSet ragged;
  ragged.features = {{1, 2}, {1}};
  ragged.labels = {TissueClass::kNotWound, TissueClass::kFibrin};
  EXPECT_THROW(TrainClassifier(Spec(ClassifierFamily::kKnnL1), ragged), InvalidArgument);
  TrainingSet ok;
  ok.features = {{1, 2}, {3, 1}};
  ok.labels = {TissueClass::kNotWound, TissueClass::kFibrin};
  ClassifierSpec no_trees;
  no_trees.trees = 0;
  EXPECT_THROW(TrainClassifier(no_trees, ok), InvalidArgument);
  const auto model = TrainClassifier(Spec(ClassifierFamily::kKnnL2), ok);
  EXPECT_THROW(PredictClassifier(model, std::vector<double>{1.0}), InvalidArgument);
  TrainingSet nan = ok;
  nan.features[1][0] = NAN;
  EXPECT_THROW(TrainClassifier(Spec(ClassifierFamily::kRandomForest), nan), InvalidArgument);
}

}  // namespace
}  // namespace ulcerseg
