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

#include <Eigen/Dense>
#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>

#include "json.hpp"
#include "ulcerseg/error.hpp"

namespace ulcerseg {

PcaCriterion ParseCriterion(std::string_view text) {
  if (text == "kg") return PcaCriterion::KaiserGuttman();
  if (text == "sp") return PcaCriterion::ScreePlot();
  auto number_after = [&](std::string_view prefix, auto& out) {
    const std::string_view rest = text.substr(prefix.size());
    auto [ptr, ec] = std::from_chars(rest.data(), rest.data() + rest.size(), out);
    if (ec != std::errc() || ptr != rest.data() + rest.size()) {
      throw InvalidArgument("bad PCA criterion '" + std::string(text) + "'");
    }
  };
  if (text.starts_with("sp:")) {
    double threshold = 0.0;
    number_after("sp:", threshold);
    if (!(threshold > 0.0 && threshold <= 1.0)) {
      throw InvalidArgument("scree threshold must be in (0, 1]");
    }
    return PcaCriterion::ScreePlot(threshold);
  }
  if (text.starts_with("fixed:")) {
    int k = 0;
    number_after("fixed:", k);
    if (k < 1) throw InvalidArgument("fixed component count must be >= 1");
    return PcaCriterion::Fixed(k);
  }
  throw InvalidArgument("unknown PCA criterion '" + std::string(text) +
                        "' (expected kg, sp, sp:<t> or fixed:<k>)");
}

std::string FormatCriterion(const PcaCriterion& criterion) {
  switch (criterion.kind) {
    case PcaCriterion::Kind::kKaiserGuttman:
      return "kg";
    case PcaCriterion::Kind::kScreePlot: {
      char buf[32];
      auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), criterion.threshold);
      return "sp:" + std::string(buf, ptr);
    }
    case PcaCriterion::Kind::kFixed:
      return "fixed:" + std::to_string(criterion.components);
  }
  return "kg";
}

int SelectComponents(const std::vector<double>& eigenvalues,
                     const PcaCriterion& criterion) {
  const int dim = static_cast<int>(eigenvalues.size());
  int retained = 1;
  switch (criterion.kind) {
    case PcaCriterion::Kind::kKaiserGuttman:
      retained = static_cast<int>(std::count_if(
          eigenvalues.begin(), eigenvalues.end(), [](double l) { return l > 1.0; }));
      break;
    case PcaCriterion::Kind::kScreePlot: {
      const double total = std::accumulate(eigenvalues.begin(), eigenvalues.end(), 0.0);
      double cumulative = 0.0;
      retained = dim;
      for (int i = 0; i < dim; ++i) {
        cumulative += eigenvalues[i];
        // Shares are compared with a small slack so a spectrum whose share is
        // exactly the threshold in decimal is not lost to rounding.
        if (total > 0.0 && cumulative / total >= criterion.threshold - 1e-12) {
          retained = i + 1;
          break;
        }
      }
      break;
    }
    case PcaCriterion::Kind::kFixed:
      if (criterion.components < 1 || criterion.components > dim) {
        throw InvalidArgument("fixed component count " +
                              std::to_string(criterion.components) +
                              " outside [1, " + std::to_string(dim) + "]");
      }
      retained = criterion.components;
      break;
  }
  return std::max(1, retained);
}

PcaModel FitPca(const std::vector<std::vector<double>>& rows,
                const PcaCriterion& criterion) {
  if (rows.size() < 2) throw InvalidArgument("PCA needs at least 2 rows");
  const size_t dim = rows.front().size();
  if (dim < 2) throw InvalidArgument("PCA needs at least 2 columns");
  const size_t n = rows.size();
  Eigen::MatrixXd data(n, dim);
  for (size_t i = 0; i < n; ++i) {
    if (rows[i].size() != dim) {
      throw InvalidArgument("PCA row " + std::to_string(i) + " has dimension " +
                            std::to_string(rows[i].size()) + ", expected " +
                            std::to_string(dim));
    }
    for (size_t j = 0; j < dim; ++j) {
      if (!std::isfinite(rows[i][j])) {
        throw InvalidArgument("PCA input contains a non-finite value at row " +
                              std::to_string(i));
      }
      data(i, j) = rows[i][j];
    }
  }

  PcaModel model;
  model.criterion = criterion;
  model.mean.resize(dim);
  model.scale.resize(dim);
  for (size_t j = 0; j < dim; ++j) {
    const double mean = data.col(j).mean();
    data.col(j).array() -= mean;
    const double var = data.col(j).squaredNorm() / static_cast<double>(n - 1);
    const double sd = var > 0.0 ? std::sqrt(var) : 1.0;
    data.col(j) /= sd;
    model.mean[j] = mean;
    model.scale[j] = sd;
  }
  const Eigen::MatrixXd corr =
      (data.transpose() * data) / static_cast<double>(n - 1);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(corr);
  if (solver.info() != Eigen::Success) {
    throw NumericError("eigendecomposition failed to converge");
  }
  // Eigen returns ascending order.
  model.eigenvalues.resize(dim);
  model.components.resize(dim * dim);
  for (size_t c = 0; c < dim; ++c) {
    const size_t src = dim - 1 - c;
    model.eigenvalues[c] = std::max(0.0, solver.eigenvalues()(src));
    Eigen::VectorXd vec = solver.eigenvectors().col(src);
    Eigen::Index pivot = 0;
    vec.cwiseAbs().maxCoeff(&pivot);
    if (vec(pivot) < 0.0) vec = -vec;
    for (size_t r = 0; r < dim; ++r) model.components[r * dim + c] = vec(r);
  }
  model.retained = SelectComponents(model.eigenvalues, criterion);
  return model;
}

std::vector<double> Transform(const PcaModel& model, const std::vector<double>& v) {
  const int dim = model.dim();
  if (static_cast<int>(v.size()) != dim) {
    throw InvalidArgument("PCA transform: vector dimension " +
                          std::to_string(v.size()) + " != model dimension " +
                          std::to_string(dim));
  }
  std::vector<double> standardized(dim);
  for (int j = 0; j < dim; ++j) standardized[j] = (v[j] - model.mean[j]) / model.scale[j];
  std::vector<double> out(model.retained, 0.0);
  for (int c = 0; c < model.retained; ++c) {
    double sum = 0.0;
    for (int r = 0; r < dim; ++r) sum += model.component(r, c) * standardized[r];
    out[c] = sum;
  }
  return out;
}

FeatureVector Transform(const PcaModel& model, const FeatureVector& v) {
  return {DescriptorKind::kPcaReduced, Transform(model, v.values)};
}

std::vector<double> InverseTransform(const PcaModel& model,
                                     const std::vector<double>& reduced) {
  const int dim = model.dim();
  if (static_cast<int>(reduced.size()) != model.retained) {
    throw InvalidArgument("PCA inverse transform: expected " +
                          std::to_string(model.retained) + " coordinates");
  }
  std::vector<double> out(dim);
  for (int r = 0; r < dim; ++r) {
    double sum = 0.0;
    for (int c = 0; c < model.retained; ++c) sum += model.component(r, c) * reduced[c];
    out[r] = sum * model.scale[r] + model.mean[r];
  }
  return out;
}

std::string PcaToJson(const PcaModel& model) {
  nlohmann::json j;
  j["type"] = "pca";
  j["mean"] = model.mean;
  j["scale"] = model.scale;
  j["eigenvalues"] = model.eigenvalues;
  j["components"] = model.components;
  j["retained"] = model.retained;
  j["criterion"] = FormatCriterion(model.criterion);
  return j.dump(2) + "\n";
}

PcaModel PcaFromJson(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    PcaModel model;
    model.mean = j.at("mean").get<std::vector<double>>();
    model.scale = j.at("scale").get<std::vector<double>>();
    model.eigenvalues = j.at("eigenvalues").get<std::vector<double>>();
    model.components = j.at("components").get<std::vector<double>>();
    model.retained = j.at("retained").get<int>();
    model.criterion = ParseCriterion(j.at("criterion").get<std::string>());
    const size_t dim = model.mean.size();
    if (model.scale.size() != dim || model.eigenvalues.size() != dim ||
        model.components.size() != dim * dim || model.retained < 1 ||
        model.retained > static_cast<int>(dim)) {
      throw DataError("PCA model arrays are inconsistent");
    }
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("bad PCA model JSON: ") + e.what());
  } catch (const InvalidArgument& e) {
    throw DataError(std::string("bad PCA model JSON: ") + e.what());
  }
}

}  // namespace ulcerseg
