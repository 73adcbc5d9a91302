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

#include "ulcerseg/pca.hpp"

#include <gtest/gtest.h>

#include <cmath>

#include "pca_oracle.hpp"
#include "ulcerseg/error.hpp"
#include "ulcerseg/random.hpp"

namespace ulcerseg {
namespace {

using testing::Matrix;

// Rows of a random linear mixture so the correlation spectrum is spread out.
Matrix MixedData(Rng& rng, int n, int d) {
  Matrix mix(d, std::vector<double>(d));
  for (auto& row : mix)
    for (auto& x : row) x = rng.Uniform(-1.0, 1.0);
  Matrix rows(n, std::vector<double>(d, 0.0));
  for (auto& row : rows) {
    std::vector<double> z(d);
    for (int j = 0; j < d; ++j) z[j] = rng.Normal() * (1.0 + 2.0 * j);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) row[i] += mix[i][j] * z[j];
    for (int i = 0; i < d; ++i) row[i] = row[i] * (i + 1) + 5.0 * i;
  }
  return rows;
}

TEST(Pca, EigenpairsMatchPowerIteration) {
  Rng rng(11);
  double worst = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const Matrix rows = MixedData(rng, 60, 8);
    const PcaModel model = FitPca(rows, PcaCriterion::KaiserGuttman());
    const auto oracle = testing::PowerIteration(testing::CorrelationMatrix(rows), 8);
    for (int c = 0; c < 8; ++c) {
      worst = std::max(worst, std::abs(model.eigenvalues[c] - oracle[c].value));
      double dot = 0.0;
      for (int r = 0; r < 8; ++r) dot += model.component(r, c) * oracle[c].vector[r];
      const double sign = dot < 0.0 ? -1.0 : 1.0;
      for (int r = 0; r < 8; ++r) {
        worst = std::max(worst,
                         std::abs(model.component(r, c) - sign * oracle[c].vector[r]));
      }
    }
  }
  RecordProperty("max_deviation", std::to_string(worst));
  EXPECT_LT(worst, 1e-6);
}

TEST(Pca, ModelInvariants) {
  Rng rng(3);
  const Matrix rows = MixedData(rng, 40, 6);
  const PcaModel model = FitPca(rows, PcaCriterion::ScreePlot());
  double trace = 0.0;
  for (int c = 0; c < 6; ++c) {
    trace += model.eigenvalues[c];
    if (c > 0) EXPECT_GE(model.eigenvalues[c - 1], model.eigenvalues[c]);
    EXPECT_GE(model.eigenvalues[c], 0.0);
    for (int c2 = 0; c2 < 6; ++c2) {
      double dot = 0.0;
      for (int r = 0; r < 6; ++r) dot += model.component(r, c) * model.component(r, c2);
      EXPECT_NEAR(dot, c == c2 ? 1.0 : 0.0, 1e-9);
    }
  }
  EXPECT_NEAR(trace, 6.0, 1e-6);
  EXPECT_GE(model.retained, 1);
  EXPECT_LE(model.retained, 6);
}

TEST(Pca, FullRankReconstruction) {
  Rng rng(5);
  const Matrix rows = MixedData(rng, 30, 8);
  const PcaModel model = FitPca(rows, PcaCriterion::Fixed(8));
  double worst = 0.0;
  for (const auto& row : rows) {
    const auto back = InverseTransform(model, Transform(model, row));
    for (int j = 0; j < 8; ++j) worst = std::max(worst, std::abs(back[j] - row[j]));
  }
  EXPECT_LT(worst, 1e-9);
}

TEST(Pca, MeanProjectsToZero) {
  Rng rng(8);
  const Matrix rows = MixedData(rng, 30, 5);
  const PcaModel model = FitPca(rows, PcaCriterion::Fixed(3));
  const FeatureVector out = Transform(model, FeatureVector{DescriptorKind::kColorLayout, model.mean});
  EXPECT_EQ(out.kind, DescriptorKind::kPcaReduced);
  ASSERT_EQ(out.dim(), 3);
  for (double x : out.values) EXPECT_NEAR(x, 0.0, 1e-12);
}

TEST(Pca, PerfectlyCorrelatedPairKeepsOne) {
  Matrix rows;
  for (int i = 0; i < 20; ++i) rows.push_back({double(i), 3.0 * i + 1.0});
  const PcaModel model = FitPca(rows, PcaCriterion::KaiserGuttman());
  EXPECT_NEAR(model.eigenvalues[0], 2.0, 1e-12);
  EXPECT_NEAR(model.eigenvalues[1], 0.0, 1e-12);
  EXPECT_EQ(model.retained, 1);
}

TEST(Pca, LineProjectionPreservesDistances) {
  Matrix rows;
  Rng rng(2);
  for (int i = 0; i < 25; ++i) {
    const double x = rng.Uniform(-4.0, 4.0);
    rows.push_back({x, 3.0 * x});
  }
  const PcaModel model = FitPca(rows, PcaCriterion::Fixed(1));
  for (size_t a = 0; a < rows.size(); ++a) {
    for (size_t b = a + 1; b < rows.size(); ++b) {
      const double pa = Transform(model, rows[a])[0];
      const double pb = Transform(model, rows[b])[0];
      double d2 = 0.0;
      for (int j = 0; j < 2; ++j) {
        const double diff = (rows[a][j] - rows[b][j]) / model.scale[j];
        d2 += diff * diff;
      }
      EXPECT_NEAR(std::abs(pa - pb), std::sqrt(d2), 1e-9);
    }
  }
}

TEST(Pca, SelectionCriteria) {
  const std::vector<double> spectrum{2.4, 0.4, 0.2};
  EXPECT_EQ(SelectComponents(spectrum, PcaCriterion::ScreePlot(0.80)), 1);
  EXPECT_EQ(SelectComponents(spectrum, PcaCriterion::ScreePlot(0.90)), 2);
  EXPECT_EQ(SelectComponents(spectrum, PcaCriterion::KaiserGuttman()), 1);
  EXPECT_EQ(SelectComponents({0.9, 0.6, 0.5}, PcaCriterion::KaiserGuttman()), 1);
  EXPECT_EQ(SelectComponents({1.5, 1.2, 0.3}, PcaCriterion::KaiserGuttman()), 2);
  EXPECT_EQ(SelectComponents(spectrum, PcaCriterion::Fixed(3)), 3);
  EXPECT_THROW(SelectComponents(spectrum, PcaCriterion::Fixed(4)), InvalidArgument);
  EXPECT_THROW(SelectComponents(spectrum, PcaCriterion::Fixed(0)), InvalidArgument);
}

TEST(Pca, CriterionParsing) {
  EXPECT_EQ(ParseCriterion("kg").kind, PcaCriterion::Kind::kKaiserGuttman);
  EXPECT_DOUBLE_EQ(ParseCriterion("sp").threshold, 0.80);
  EXPECT_DOUBLE_EQ(ParseCriterion("sp:0.9").threshold, 0.9);
  EXPECT_EQ(ParseCriterion("fixed:7").components, 7);
  EXPECT_EQ(FormatCriterion(ParseCriterion("sp:0.85")), "sp:0.85");
  EXPECT_THROW(ParseCriterion("fixed:x"), InvalidArgument);
  EXPECT_THROW(ParseCriterion("median"), InvalidArgument);
}

TEST(Pca, RejectsBadInput) {
  EXPECT_THROW(FitPca({{1.0, 2.0}}, PcaCriterion::KaiserGuttman()), InvalidArgument);
  EXPECT_THROW(FitPca({{1.0}, {2.0}}, PcaCriterion::KaiserGuttman()), InvalidArgument);
  EXPECT_THROW(FitPca({{1.0, NAN}, {2.0, 1.0}}, PcaCriterion::KaiserGuttman()),
               InvalidArgument);
  EXPECT_THROW(FitPca({{1.0, INFINITY}, {2.0, 1.0}}, PcaCriterion::KaiserGuttman()),
               InvalidArgument);
  const PcaModel model = FitPca({{1.0, 2.0}, {2.0, 1.0}, {0.0, 0.5}}, PcaCriterion::Fixed(2));
  EXPECT_THROW(Transform(model, std::vector<double>{1.0}), InvalidArgument);
}

TEST(Pca, ConstantColumnGetsUnitScale) {
  const PcaModel model =
      FitPca({{1.0, 4.0, 0.0}, {2.0, 4.0, 1.0}, {3.0, 4.0, 5.0}}, PcaCriterion::KaiserGuttman());
  EXPECT_DOUBLE_EQ(model.scale[1], 1.0);
  for (double l : model.eigenvalues) EXPECT_TRUE(std::isfinite(l));
}

TEST(Pca, JsonRoundTrip) {
  Rng rng(4);
  const PcaModel model = FitPca(MixedData(rng, 20, 4), PcaCriterion::ScreePlot(0.7));
  const PcaModel back = PcaFromJson(PcaToJson(model));
  EXPECT_EQ(back.mean, model.mean);
  EXPECT_EQ(back.scale, model.scale);
  EXPECT_EQ(back.components, model.components);
  EXPECT_EQ(back.eigenvalues, model.eigenvalues);
  EXPECT_EQ(back.retained, model.retained);
  EXPECT_EQ(PcaToJson(back), PcaToJson(model));
  EXPECT_THROW(PcaFromJson("{}"), DataError);
  EXPECT_THROW(PcaFromJson("not json"), DataError);
}

}  // namespace
}  // namespace ulcerseg
