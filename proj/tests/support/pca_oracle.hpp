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

// Textbook reference routines used to check the PCA module: the sample
// correlation matrix and power iteration with Hotelling deflation.

#pragma once

#include <cmath>
#include <utility>
#include <vector>

namespace ulcerseg::testing {

using Matrix = std::vector<std::vector<double>>;

inline Matrix CorrelationMatrix(const Matrix& rows) {
  const size_t n = rows.size();
  const size_t d = rows.front().size();
  std::vector<double> mean(d, 0.0), sd(d, 0.0);
  for (const auto& r : rows)
    for (size_t j = 0; j < d; ++j) mean[j] += r[j] / n;
  for (const auto& r : rows)
    for (size_t j = 0; j < d; ++j) sd[j] += (r[j] - mean[j]) * (r[j] - mean[j]);
  for (size_t j = 0; j < d; ++j) sd[j] = std::sqrt(sd[j] / (n - 1));
  Matrix c(d, std::vector<double>(d, 0.0));
  for (size_t a = 0; a < d; ++a) {
    for (size_t b = 0; b < d; ++b) {
      double s = 0.0;
      for (const auto& r : rows) s += (r[a] - mean[a]) * (r[b] - mean[b]);
      c[a][b] = s / (n - 1) / (sd[a] * sd[b]);
    }
  }
  return c;
}

struct EigenPair {
  double value = 0.0;
  std::vector<double> vector;
};

// Dominant eigenpairs of a symmetric positive semidefinite matrix, one at a
// time, deflating A <- A - lambda v v^T after each.
inline std::vector<EigenPair> PowerIteration(Matrix a, int count) {
  const size_t d = a.size();
  std::vector<EigenPair> out;
  for (int k = 0; k < count; ++k) {
    std::vector<double> v(d);
    for (size_t i = 0; i < d; ++i) v[i] = 1.0 + 0.1 * static_cast<double>(i);
    double lambda = 0.0;
    for (int iter = 0; iter < 200000; ++iter) {
      std::vector<double> w(d, 0.0);
      for (size_t i = 0; i < d; ++i)
        for (size_t j = 0; j < d; ++j) w[i] += a[i][j] * v[j];
      double norm = 0.0;
      for (double x : w) norm += x * x;
      norm = std::sqrt(norm);
      if (norm == 0.0) break;
      double delta = 0.0;
      for (size_t i = 0; i < d; ++i) {
        w[i] /= norm;
        delta = std::max(delta, std::abs(w[i] - v[i]));
      }
      v = std::move(w);
      lambda = norm;
      if (delta < 1e-14) break;
    }
    for (size_t i = 0; i < d; ++i)
      for (size_t j = 0; j < d; ++j) a[i][j] -= lambda * v[i] * v[j];
    out.push_back({lambda, v});
  }
  return out;
}

}  // namespace ulcerseg::testing
