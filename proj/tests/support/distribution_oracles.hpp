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

// Simpson-rule integrals of the chi-square and studentized-range densities.

#pragma once

#include <cmath>
#include <numbers>

namespace ulcerseg::testing {

template <typename F>
double Simpson(F f, double a, double b, int intervals) {
  const double h = (b - a) / intervals;
  double sum = f(a) + f(b);
  for (int i = 1; i < intervals; ++i) sum += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
  return sum * h / 3.0;
}

// Density integrated after t = u^2, which removes the singularity at 0.
inline double ChiSquareOracle(double x, double df) {
  const double norm = std::pow(2.0, df / 2.0) * std::tgamma(df / 2.0);
  return Simpson(
      [&](double u) { return 2.0 * std::pow(u, df - 1.0) * std::exp(-u * u / 2.0) / norm; }, 0.0,
      std::sqrt(x), 20000);
}

inline double RangeOracle(double q, int k) {
  auto phi = [](double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); };
  return k * Simpson(
                 [&](double z) {
                   return std::exp(-z * z / 2) / std::sqrt(2 * std::numbers::pi) *
                          std::pow(phi(z) - phi(z - q), k - 1);
                 },
                 -12.0, 12.0 + q, 40000);
}

}  // namespace ulcerseg::testing
