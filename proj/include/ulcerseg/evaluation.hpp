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

// Classification metrics, stratified and leave-one-image-out
// cross-validation, and the Friedman test with Nemenyi post-hoc p-values.

#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "ulcerseg/classifiers.hpp"
#include "ulcerseg/imagecore.hpp"

namespace ulcerseg {

// Square count matrix; rows are true classes, columns predicted classes.
struct ConfusionMatrix {
  int k = 0;
  std::vector<int64_t> counts;

  explicit ConfusionMatrix(int classes = kNumTissueClasses)
      : k(classes), counts(static_cast<size_t>(classes) * classes, 0) {}
  ConfusionMatrix(int classes, std::vector<int64_t> values);

  int64_t& at(int truth, int predicted) { return counts[static_cast<size_t>(truth) * k + predicted]; }
  int64_t at(int truth, int predicted) const {
    return counts[static_cast<size_t>(truth) * k + predicted];
  }
  int64_t total() const;
};

ConfusionMatrix Confusion(const std::vector<TissueClass>& truth,
                          const std::vector<TissueClass>& predicted);

// Cohen's kappa. When chance agreement is 1 (one class on both axes) the
// value is 1 for perfect agreement; otherwise NumericError.
double Kappa(const ConfusionMatrix& m);

// One-vs-rest ROC area by the rank-sum method with average ranks for ties.
// Returns NaN when either side is empty.
double RocAuc(const std::vector<double>& scores, const std::vector<bool>& positive);

struct MetricReport {
  double accuracy = 0.0;
  double kappa = 0.0;
  double f1 = 0.0;
  double sensitivity = 0.0;
  double specificity = 0.0;
  // Support-weighted over classes that have both positives and negatives;
  // NaN when no class does.
  double auc = 0.0;
  std::array<double, kNumTissueClasses> class_f1{};
  std::array<int64_t, kNumTissueClasses> support{};
};

using ScoreRow = std::array<double, kNumTissueClasses>;

// Throws InvalidArgument on empty input, length mismatch or a score row not
// summing to 1 +- 1e-6.
MetricReport ComputeMetrics(const std::vector<TissueClass>& truth,
                            const std::vector<TissueClass>& predicted,
                            const std::vector<ScoreRow>& scores);

// Stratified fold assignment: members of each class are shuffled and dealt
// round-robin, continuing the deal across classes. Returns the test indices
// of each fold. Throws InvalidArgument if folds < 2 or a present class has
// fewer than `folds` instances.
std::vector<std::vector<size_t>> StratifiedFolds(const std::vector<TissueClass>& labels,
                                                 int folds, uint64_t seed);

// One fold per distinct group, ordered by group id.
std::vector<std::vector<size_t>> GroupFolds(const std::vector<std::string>& groups);

struct InstancePrediction {
  size_t instance = 0;
  int fold = 0;
  TissueClass truth = TissueClass::kNotWound;
  Prediction prediction;
};

struct CrossValidationReport {
  std::vector<MetricReport> folds;
  MetricReport mean;
  // Sample standard deviation across folds (n - 1).
  MetricReport stddev;
  std::vector<InstancePrediction> predictions;
};

// Trains on the complement of `test` and predicts every index in `test`.
using FoldRunner = std::function<std::vector<Prediction>(const std::vector<size_t>& train,
                                                         const std::vector<size_t>& test)>;

CrossValidationReport CrossValidate(const std::vector<TissueClass>& labels,
                                    const std::vector<std::vector<size_t>>& folds,
                                    const FoldRunner& run);

CrossValidationReport CrossValidateClassifier(const ClassifierSpec& spec,
                                              const TrainingSet& data,
                                              const std::vector<std::vector<size_t>>& folds);

struct RankTestReport {
  int datasets = 0;
  int methods = 0;
  std::vector<std::string> names;
  std::vector<double> mean_ranks;
  double statistic = 0.0;
  double p_value = 1.0;
  // methods x methods, row-major, unit diagonal.
  std::vector<double> nemenyi;
  double alpha = 0.05;

  double nemenyi_p(int i, int j) const { return nemenyi[static_cast<size_t>(i) * methods + j]; }
};

// Rows are datasets, columns methods; larger is better. Throws
// InvalidArgument if N < 2, k < 2, the matrix is ragged or has a
// non-finite entry.
RankTestReport FriedmanNemenyi(const std::vector<std::vector<double>>& measurements,
                               double alpha = 0.05, std::vector<std::string> names = {});

// P(X <= x) for a chi-square variable with `df` degrees of freedom.
double ChiSquareCdf(double x, double df);
// P(Q <= q) for the studentized range of k standard normals (infinite
// degrees of freedom).
double StudentizedRangeCdf(double q, int k);

std::string MetricsToJson(const MetricReport& report);
std::string CrossValidationToJson(const CrossValidationReport& report);
// `instance_id,true,pred,score0..3`.
std::string PredictionsToCsv(const CrossValidationReport& report);
std::string RankTestToJson(const RankTestReport& report);

// Parses `dataset,<method>,...` with one row per dataset.
struct ResultsMatrix {
  std::vector<std::string> methods;
  std::vector<std::string> datasets;
  std::vector<std::vector<double>> values;
};
// Throws DataError on malformed input.
ResultsMatrix ParseResultsCsv(const std::string& text);

}  // namespace ulcerseg
