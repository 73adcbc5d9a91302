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

// Principal component analysis on the correlation matrix with
// Kaiser-Guttman, cumulative-variance (scree) or fixed component selection.

#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "ulcerseg/mpeg7.hpp"

namespace ulcerseg {

struct PcaCriterion {
  enum class Kind { kKaiserGuttman, kScreePlot, kFixed };

  Kind kind = Kind::kKaiserGuttman;
  // Cumulative explained-variance ratio for kScreePlot.
  double threshold = 0.80;
  // Component count for kFixed.
  int components = 0;

  static PcaCriterion KaiserGuttman() { return {Kind::kKaiserGuttman, 0.80, 0}; }
  static PcaCriterion ScreePlot(double threshold = 0.80) {
    return {Kind::kScreePlot, threshold, 0};
  }
  static PcaCriterion Fixed(int k) { return {Kind::kFixed, 0.80, k}; }
};

// "kg", "sp", "sp:<threshold>", "fixed:<k>".
PcaCriterion ParseCriterion(std::string_view text);
std::string FormatCriterion(const PcaCriterion& criterion);

struct PcaModel {
  std::vector<double> mean;
  // Per-feature standard deviation; 1.0 for constant columns.
  std::vector<double> scale;
  // dim x dim, row-major; column j is the eigenvector of eigenvalues[j].
  std::vector<double> components;
  // Descending, clamped at 0.
  std::vector<double> eigenvalues;
  int retained = 1;
  PcaCriterion criterion;

  int dim() const { return static_cast<int>(mean.size()); }
  double component(int row, int col) const {
    return components[static_cast<size_t>(row) * dim() + col];
  }
};

// Number of leading components kept by `criterion` for a descending
// spectrum; always in [1, size]. Throws InvalidArgument for a fixed count
// outside that range.
int SelectComponents(const std::vector<double>& eigenvalues,
                     const PcaCriterion& criterion);

// Standardizes the columns, eigendecomposes the correlation matrix and
// applies `criterion`. Throws InvalidArgument for fewer than 2 rows or
// columns, ragged rows or non-finite values.
PcaModel FitPca(const std::vector<std::vector<double>>& rows,
                const PcaCriterion& criterion);

// Projection onto the retained components of the standardized vector.
// Throws InvalidArgument on a dimension mismatch.
FeatureVector Transform(const PcaModel& model, const FeatureVector& v);
std::vector<double> Transform(const PcaModel& model, const std::vector<double>& v);

// Maps retained-component coordinates back to feature space.
std::vector<double> InverseTransform(const PcaModel& model,
                                     const std::vector<double>& reduced);

std::string PcaToJson(const PcaModel& model);
// Throws DataError on malformed input.
PcaModel PcaFromJson(const std::string& text);

}  // namespace ulcerseg
