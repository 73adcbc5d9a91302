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

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <numeric>

#include "json.hpp"
#include "ulcerseg/error.hpp"
#include "ulcerseg/parallel.hpp"
#include "ulcerseg/random.hpp"

namespace ulcerseg {
namespace {

using Counts = std::array<int, kNumTissueClasses>;

double Gini(const Counts& counts, int n) {
  double g = 1.0;
  for (int c : counts) {
    const double p = static_cast<double>(c) / n;
    g -= p * p;
  }
  return g;
}

TissueClass Majority(const Counts& counts) {
  int best = 0;
  for (int c = 1; c < kNumTissueClasses; ++c) {
    if (counts[c] > counts[best]) best = c;
  }
  return static_cast<TissueClass>(best);
}

struct Split {
  bool valid = false;
  double gain = 0.0;
  int feature = 0;
  double threshold = 0.0;

  bool BetterThan(const Split& other) const {
    if (!other.valid) return true;
    if (gain != other.gain) return gain > other.gain;
    if (feature != other.feature) return feature < other.feature;
    return threshold < other.threshold;
  }
};

// Best threshold on one feature; thresholds are midpoints between
// consecutive distinct values.
Split BestSplitOn(const TrainingSet& data, std::vector<int>& rows, int feature,
                  const Counts& total, double parent) {
  std::sort(rows.begin(), rows.end(), [&](int a, int b) {
    const double va = data.features[a][feature];
    const double vb = data.features[b][feature];
    return va < vb || (va == vb && a < b);
  });
  const int n = static_cast<int>(rows.size());
  Counts left{};
  Split best;
  for (int i = 0; i + 1 < n; ++i) {
    ++left[ClassCode(data.labels[rows[i]])];
    const double a = data.features[rows[i]][feature];
    const double b = data.features[rows[i + 1]][feature];
    if (!(a < b)) continue;
    Counts right;
    for (int c = 0; c < kNumTissueClasses; ++c) right[c] = total[c] - left[c];
    const int nl = i + 1;
    const int nr = n - nl;
    const double weighted = (nl * Gini(left, nl) + nr * Gini(right, nr)) / n;
    Split s;
    s.valid = true;
    s.gain = parent - weighted;
    s.feature = feature;
    s.threshold = 0.5 * (a + b);
    if (!(s.threshold < b)) s.threshold = a;
    if (s.BetterThan(best)) best = s;
  }
  return best;
}

void CheckFinite(std::span<const double> x) {
  for (double v : x) {
    if (!std::isfinite(v)) throw InvalidArgument("feature vector contains a non-finite value");
  }
}

NetworkSpec MlpSpec(int dim, int hidden, int outputs) {
  NetworkSpec spec;
  spec.input_size = 1;
  spec.input_channels = dim;
  spec.head = {LayerSpec::Dense(hidden), LayerSpec::Relu(), LayerSpec::Dense(hidden),
               LayerSpec::Relu(), LayerSpec::Dense(outputs)};
  return spec;
}

std::vector<double> Standardize(const ClassifierModel& model, std::span<const double> x) {
  std::vector<double> out(x.size());
  for (size_t j = 0; j < x.size(); ++j) {
    out[j] = (x[j] - model.input_mean[j]) / model.input_scale[j];
  }
  return out;
}

}  // namespace

const char* FamilyName(ClassifierFamily family) {
  switch (family) {
    case ClassifierFamily::kRandomForest:
      return "rf";
    case ClassifierFamily::kKnnL1:
      return "knn-l1";
    case ClassifierFamily::kKnnL2:
      return "knn-l2";
    case ClassifierFamily::kGaussianNb:
      return "gnb";
    case ClassifierFamily::kMlp:
      return "mlp";
  }
  return "rf";
}

ClassifierFamily ParseFamily(std::string_view name) {
  for (auto f : {ClassifierFamily::kRandomForest, ClassifierFamily::kKnnL1,
                 ClassifierFamily::kKnnL2, ClassifierFamily::kGaussianNb,
                 ClassifierFamily::kMlp}) {
    if (name == FamilyName(f)) return f;
  }
  throw InvalidArgument("unknown classifier '" + std::string(name) +
                        "' (expected rf, knn-l1, knn-l2, gnb or mlp)");
}

TrainingSet ToTrainingSet(const FeatureTable& table) {
  TrainingSet set;
  for (const auto& row : table.rows) {
    set.features.push_back(row.values);
    set.labels.push_back(row.label);
  }
  return set;
}

void ValidateClassifierSpec(const ClassifierSpec& spec) {
  if (spec.trees < 1) throw InvalidArgument("tree count must be >= 1");
  if (spec.features_per_split < 0) throw InvalidArgument("features_per_split must be >= 0");
  if (spec.neighbors < 1) throw InvalidArgument("neighbor count must be >= 1");
  if (spec.hidden_units < 1) throw InvalidArgument("hidden_units must be >= 1");
  if (spec.family == ClassifierFamily::kMlp) ValidateTrainConfig(spec.mlp);
}

TissueClass DecisionTree::Classify(std::span<const double> x) const {
  int node = 0;
  while (nodes[node].feature >= 0) {
    node = x[nodes[node].feature] <= nodes[node].threshold ? nodes[node].left
                                                           : nodes[node].right;
  }
  return nodes[node].label;
}

int DecisionTree::depth() const {
  std::vector<int> d(nodes.size(), 0);
  int deepest = 0;
  for (size_t i = 0; i < nodes.size(); ++i) {
    deepest = std::max(deepest, d[i]);
    if (nodes[i].feature >= 0) {
      d[nodes[i].left] = d[i] + 1;
      d[nodes[i].right] = d[i] + 1;
    }
  }
  return deepest;
}

DecisionTree GrowTree(const TrainingSet& data, std::vector<int> rows,
                      int features_per_split, uint64_t seed) {
  const int dim = data.dim();
  const int m = features_per_split <= 0 || features_per_split > dim ? dim : features_per_split;
  Rng rng(seed);
  DecisionTree tree;
  tree.nodes.emplace_back();
  struct Pending {
    int node;
    std::vector<int> rows;
  };
  std::vector<Pending> stack;
  stack.push_back({0, std::move(rows)});
  std::vector<int> order(dim);
  while (!stack.empty()) {
    Pending task = std::move(stack.back());
    stack.pop_back();
    Counts counts{};
    for (int r : task.rows) ++counts[ClassCode(data.labels[r])];
    const int n = static_cast<int>(task.rows.size());
    tree.nodes[task.node].label = Majority(counts);
    const bool pure =
        std::count_if(counts.begin(), counts.end(), [](int c) { return c > 0; }) <= 1;
    if (pure || n < 2) continue;

    std::iota(order.begin(), order.end(), 0);
    if (m < dim) rng.Shuffle(std::span<int>(order));
    const double parent = Gini(counts, n);
    Split best;
    // The first m features are always examined; later ones only until a
    // usable split turns up.
    for (int k = 0; k < dim && (k < m || !best.valid); ++k) {
      const Split s = BestSplitOn(data, task.rows, order[k], counts, parent);
      if (s.valid && s.BetterThan(best)) best = s;
    }
    if (!best.valid) continue;

    std::vector<int> left, right;
    for (int r : task.rows) {
      (data.features[r][best.feature] <= best.threshold ? left : right).push_back(r);
    }
    const int li = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();
    tree.nodes.emplace_back();
    TreeNode& node = tree.nodes[task.node];
    node.feature = best.feature;
    node.threshold = best.threshold;
    node.left = li;
    node.right = li + 1;
    stack.push_back({li + 1, std::move(right)});
    stack.push_back({li, std::move(left)});
  }
  return tree;
}

ClassifierModel TrainClassifier(const ClassifierSpec& spec, const TrainingSet& data) {
  ValidateClassifierSpec(spec);
  if (data.size() == 0) throw InvalidArgument("training set is empty");
  if (data.labels.size() != data.size()) {
    throw InvalidArgument("training set has " + std::to_string(data.size()) + " rows but " +
                          std::to_string(data.labels.size()) + " labels");
  }
  const int dim = data.dim();
  if (dim < 1) throw InvalidArgument("training rows have no features");
  for (size_t i = 0; i < data.size(); ++i) {
    if (static_cast<int>(data.features[i].size()) != dim) {
      throw InvalidArgument("training row " + std::to_string(i) + " has dimension " +
                            std::to_string(data.features[i].size()) + ", expected " +
                            std::to_string(dim));
    }
    CheckFinite(data.features[i]);
  }

  ClassifierModel model;
  model.spec = spec;
  model.dim = dim;
  std::array<int, kNumTissueClasses> class_index;
  class_index.fill(-1);
  {
    Counts counts{};
    for (auto l : data.labels) ++counts[ClassCode(l)];
    for (int c = 0; c < kNumTissueClasses; ++c) {
      if (counts[c] > 0) {
        class_index[c] = static_cast<int>(model.classes.size());
        model.classes.push_back(static_cast<TissueClass>(c));
      }
    }
  }
  const size_t n = data.size();

  switch (spec.family) {
    case ClassifierFamily::kRandomForest: {
      const int m = spec.features_per_split > 0
                        ? std::min(spec.features_per_split, dim)
                        : static_cast<int>(std::ceil(std::sqrt(static_cast<double>(dim))));
      model.trees.resize(spec.trees);
      ParallelFor(spec.trees, [&](size_t t) {
        const uint64_t tree_seed = spec.seed + t;
        std::vector<int> rows(n);
        if (spec.bootstrap) {
          Rng draw(tree_seed);
          for (auto& r : rows) r = static_cast<int>(draw.Index(n));
        } else {
          std::iota(rows.begin(), rows.end(), 0);
        }
        model.trees[t] = GrowTree(data, std::move(rows), m, MixSeed(tree_seed, 1));
      });
      break;
    }
    case ClassifierFamily::kKnnL1:
    case ClassifierFamily::kKnnL2:
      model.exemplars = data.features;
      model.exemplar_labels = data.labels;
      break;
    case ClassifierFamily::kGaussianNb: {
      const size_t k = model.classes.size();
      model.means.assign(k, std::vector<double>(dim, 0.0));
      model.variances.assign(k, std::vector<double>(dim, 0.0));
      std::vector<int> counts(k, 0);
      for (size_t i = 0; i < n; ++i) {
        const int c = class_index[ClassCode(data.labels[i])];
        ++counts[c];
        for (int j = 0; j < dim; ++j) model.means[c][j] += data.features[i][j];
      }
      for (size_t c = 0; c < k; ++c)
        for (int j = 0; j < dim; ++j) model.means[c][j] /= counts[c];
      for (size_t i = 0; i < n; ++i) {
        const int c = class_index[ClassCode(data.labels[i])];
        for (int j = 0; j < dim; ++j) {
          const double d = data.features[i][j] - model.means[c][j];
          model.variances[c][j] += d * d;
        }
      }
      for (size_t c = 0; c < k; ++c) {
        for (int j = 0; j < dim; ++j) model.variances[c][j] = model.variances[c][j] / counts[c] + 1e-9;
        model.log_priors.push_back(std::log(static_cast<double>(counts[c]) / n));
      }
      break;
    }
    case ClassifierFamily::kMlp: {
      model.input_mean.assign(dim, 0.0);
      model.input_scale.assign(dim, 0.0);
      for (const auto& row : data.features)
        for (int j = 0; j < dim; ++j) model.input_mean[j] += row[j] / n;
      for (const auto& row : data.features)
        for (int j = 0; j < dim; ++j) {
          const double d = row[j] - model.input_mean[j];
          model.input_scale[j] += d * d / n;
        }
      for (double& s : model.input_scale) s = s > 0.0 ? std::sqrt(s) : 1.0;
      std::vector<std::vector<double>> inputs;
      std::vector<int> targets;
      for (size_t i = 0; i < n; ++i) {
        inputs.push_back(Standardize(model, data.features[i]));
        targets.push_back(class_index[ClassCode(data.labels[i])]);
      }
      TrainConfig config = spec.mlp;
      config.seed = spec.seed;
      model.network = Train(MlpSpec(dim, spec.hidden_units, static_cast<int>(model.classes.size())),
                            config, VectorSource(std::move(inputs), std::move(targets)),
                            VectorSource({}, {}));
      break;
    }
  }
  return model;
}

Prediction PredictClassifier(const ClassifierModel& model, std::span<const double> x) {
  if (static_cast<int>(x.size()) != model.dim) {
    throw InvalidArgument("feature vector has dimension " + std::to_string(x.size()) +
                          ", model expects " + std::to_string(model.dim));
  }
  CheckFinite(x);
  std::array<double, kNumTissueClasses> scores{};
  switch (model.spec.family) {
    case ClassifierFamily::kRandomForest:
      for (const auto& tree : model.trees) scores[ClassCode(tree.Classify(x))] += 1.0;
      for (double& s : scores) s /= static_cast<double>(model.trees.size());
      break;
    case ClassifierFamily::kKnnL1:
    case ClassifierFamily::kKnnL2: {
      const bool l1 = model.spec.family == ClassifierFamily::kKnnL1;
      std::vector<std::pair<double, int>> dist(model.exemplars.size());
      for (size_t i = 0; i < model.exemplars.size(); ++i) {
        double d = 0.0;
        for (size_t j = 0; j < x.size(); ++j) {
          const double diff = x[j] - model.exemplars[i][j];
          d += l1 ? std::abs(diff) : diff * diff;
        }
        dist[i] = {d, ClassCode(model.exemplar_labels[i])};
      }
      const size_t k = std::min<size_t>(model.spec.neighbors, dist.size());
      std::partial_sort(dist.begin(), dist.begin() + k, dist.end());
      for (size_t i = 0; i < k; ++i) scores[dist[i].second] += 1.0;
      for (double& s : scores) s /= static_cast<double>(k);
      break;
    }
    case ClassifierFamily::kGaussianNb: {
      std::vector<double> log_post(model.classes.size());
      for (size_t c = 0; c < model.classes.size(); ++c) {
        double lp = model.log_priors[c];
        for (size_t j = 0; j < x.size(); ++j) {
          const double v = model.variances[c][j];
          const double d = x[j] - model.means[c][j];
          lp -= 0.5 * std::log(2.0 * std::numbers::pi * v) + d * d / (2.0 * v);
        }
        log_post[c] = lp;
      }
      const double top = *std::max_element(log_post.begin(), log_post.end());
      double sum = 0.0;
      for (double& lp : log_post) sum += (lp = std::exp(lp - top));
      for (size_t c = 0; c < model.classes.size(); ++c) {
        scores[ClassCode(model.classes[c])] = log_post[c] / sum;
      }
      break;
    }
    case ClassifierFamily::kMlp: {
      const auto s = PredictScores(model.network, Standardize(model, x));
      for (size_t c = 0; c < model.classes.size(); ++c) scores[ClassCode(model.classes[c])] = s[c];
      break;
    }
  }
  return FromScores(scores);
}

std::string ClassifierToJson(const ClassifierModel& model) {
  nlohmann::json j;
  j["type"] = "classifier";
  j["family"] = FamilyName(model.spec.family);
  j["dim"] = model.dim;
  std::vector<int> classes;
  for (auto c : model.classes) classes.push_back(ClassCode(c));
  j["classes"] = classes;
  const auto& s = model.spec;
  j["spec"] = {{"seed", s.seed},
               {"trees", s.trees},
               {"features_per_split", s.features_per_split},
               {"bootstrap", s.bootstrap},
               {"neighbors", s.neighbors},
               {"hidden_units", s.hidden_units},
               {"learning_rate", s.mlp.learning_rate},
               {"momentum", s.mlp.momentum},
               {"batch_size", s.mlp.batch_size},
               {"max_epochs", s.mlp.max_epochs},
               {"patience", s.mlp.patience}};
  switch (s.family) {
    case ClassifierFamily::kRandomForest: {
      nlohmann::json trees = nlohmann::json::array();
      for (const auto& tree : model.trees) {
        nlohmann::json nodes = nlohmann::json::array();
        for (const auto& n : tree.nodes) {
          nodes.push_back({n.feature, n.threshold, n.left, n.right, ClassCode(n.label)});
        }
        trees.push_back(nodes);
      }
      j["trees"] = trees;
      break;
    }
    case ClassifierFamily::kKnnL1:
    case ClassifierFamily::kKnnL2: {
      j["exemplars"] = model.exemplars;
      std::vector<int> labels;
      for (auto l : model.exemplar_labels) labels.push_back(ClassCode(l));
      j["exemplar_labels"] = labels;
      break;
    }
    case ClassifierFamily::kGaussianNb:
      j["means"] = model.means;
      j["variances"] = model.variances;
      j["log_priors"] = model.log_priors;
      break;
    case ClassifierFamily::kMlp:
      j["input_mean"] = model.input_mean;
      j["input_scale"] = model.input_scale;
      j["network"] = nlohmann::json::parse(NetworkToJson(model.network, true));
      break;
  }
  return j.dump(1) + "\n";
}

ClassifierModel ClassifierFromJson(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    ClassifierModel model;
    auto& s = model.spec;
    s.family = ParseFamily(j.at("family").get<std::string>());
    const auto& js = j.at("spec");
    s.seed = js.at("seed").get<uint64_t>();
    s.trees = js.at("trees").get<int>();
    s.features_per_split = js.at("features_per_split").get<int>();
    s.bootstrap = js.at("bootstrap").get<bool>();
    s.neighbors = js.at("neighbors").get<int>();
    s.hidden_units = js.at("hidden_units").get<int>();
    s.mlp.learning_rate = js.at("learning_rate").get<double>();
    s.mlp.momentum = js.at("momentum").get<double>();
    s.mlp.batch_size = js.at("batch_size").get<int>();
    s.mlp.max_epochs = js.at("max_epochs").get<int>();
    s.mlp.patience = js.at("patience").get<int>();
    s.mlp.seed = s.seed;
    model.dim = j.at("dim").get<int>();
    for (int c : j.at("classes").get<std::vector<int>>()) model.classes.push_back(ClassFromCode(c));
    if (model.dim < 1 || model.classes.empty()) throw DataError("classifier has no dimension or classes");
    switch (s.family) {
      case ClassifierFamily::kRandomForest:
        for (const auto& jt : j.at("trees")) {
          DecisionTree tree;
          for (const auto& jn : jt) {
            TreeNode n;
            n.feature = jn.at(0).get<int>();
            n.threshold = jn.at(1).get<double>();
            n.left = jn.at(2).get<int>();
            n.right = jn.at(3).get<int>();
            n.label = ClassFromCode(jn.at(4).get<int>());
            tree.nodes.push_back(n);
          }
          const int count = static_cast<int>(tree.nodes.size());
          for (int i = 0; i < count; ++i) {
            const auto& n = tree.nodes[i];
            if (n.feature >= model.dim ||
                (n.feature >= 0 && (n.left <= i || n.right <= i || n.left >= count ||
                                    n.right >= count))) {
              throw DataError("malformed decision tree node " + std::to_string(i));
            }
          }
          if (tree.nodes.empty()) throw DataError("empty decision tree");
          model.trees.push_back(std::move(tree));
        }
        if (model.trees.empty()) throw DataError("random forest has no trees");
        break;
      case ClassifierFamily::kKnnL1:
      case ClassifierFamily::kKnnL2:
        model.exemplars = j.at("exemplars").get<std::vector<std::vector<double>>>();
        for (int c : j.at("exemplar_labels").get<std::vector<int>>()) {
          model.exemplar_labels.push_back(ClassFromCode(c));
        }
        if (model.exemplars.empty() || model.exemplars.size() != model.exemplar_labels.size()) {
          throw DataError("k-NN exemplars and labels disagree");
        }
        for (const auto& e : model.exemplars) {
          if (static_cast<int>(e.size()) != model.dim) throw DataError("k-NN exemplar dimension");
        }
        break;
      case ClassifierFamily::kGaussianNb:
        model.means = j.at("means").get<std::vector<std::vector<double>>>();
        model.variances = j.at("variances").get<std::vector<std::vector<double>>>();
        model.log_priors = j.at("log_priors").get<std::vector<double>>();
        if (model.means.size() != model.classes.size() ||
            model.variances.size() != model.classes.size() ||
            model.log_priors.size() != model.classes.size()) {
          throw DataError("naive Bayes parameters do not match the class list");
        }
        break;
      case ClassifierFamily::kMlp:
        model.input_mean = j.at("input_mean").get<std::vector<double>>();
        model.input_scale = j.at("input_scale").get<std::vector<double>>();
        model.network = NetworkFromJson(j.at("network").dump());
        if (static_cast<int>(model.input_mean.size()) != model.dim ||
            InputDim(model.network.spec) != model.dim ||
            model.network.spec.outputs() != static_cast<int>(model.classes.size())) {
          throw DataError("MLP network does not match the classifier dimension");
        }
        break;
    }
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("bad classifier JSON: ") + e.what());
  } catch (const InvalidArgument& e) {
    throw DataError(std::string("bad classifier JSON: ") + e.what());
  }
}

}  // namespace ulcerseg
