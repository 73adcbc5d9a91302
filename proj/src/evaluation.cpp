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

#include "ulcerseg/evaluation.hpp"

#include <algorithm>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <numeric>
#include <sstream>

#include "json.hpp"
#include "ulcerseg/error.hpp"
#include "ulcerseg/random.hpp"
#include "ulcerseg/text.hpp"

namespace ulcerseg {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Ranks (1 = smallest) with ties sharing their average rank.
std::vector<double> AverageRanks(const std::vector<double>& values, double* tie_term = nullptr) {
  const size_t n = values.size();
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](size_t a, size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(n);
  for (size_t i = 0; i < n;) {
    size_t j = i;
    while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
    const double rank = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
    for (size_t t = i; t <= j; ++t) ranks[order[t]] = rank;
    if (tie_term) {
      const double t = static_cast<double>(j - i + 1);
      *tie_term += t * t * t - t;
    }
    i = j + 1;
  }
  return ranks;
}

double NormalCdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

template <typename F>
void ForEachMetric(MetricReport& out, F f) {
  f(out.accuracy);
  f(out.kappa);
  f(out.f1);
  f(out.sensitivity);
  f(out.specificity);
  f(out.auc);
  for (double& v : out.class_f1) f(v);
}

nlohmann::json MetricJson(const MetricReport& r) {
  auto num = [](double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); };
  nlohmann::json classes = nlohmann::json::object();
  for (int c = 0; c < kNumTissueClasses; ++c) {
    classes[ClassName(static_cast<TissueClass>(c))] = {{"f1", num(r.class_f1[c])},
                                                       {"support", r.support[c]}};
  }
  return {{"accuracy", num(r.accuracy)},     {"kappa", num(r.kappa)},
          {"f1", num(r.f1)},                 {"sensitivity", num(r.sensitivity)},
          {"specificity", num(r.specificity)}, {"auc", num(r.auc)},
          {"classes", classes}};
}

}  // namespace

ConfusionMatrix::ConfusionMatrix(int classes, std::vector<int64_t> values)
    : k(classes), counts(std::move(values)) {
  if (classes < 1 || counts.size() != static_cast<size_t>(classes) * classes) {
    throw InvalidArgument("confusion matrix must be square");
  }
  for (auto c : counts) {
    if (c < 0) throw InvalidArgument("confusion matrix counts must be nonnegative");
  }
}

int64_t ConfusionMatrix::total() const {
  return std::accumulate(counts.begin(), counts.end(), int64_t{0});
}

ConfusionMatrix Confusion(const std::vector<TissueClass>& truth,
                          const std::vector<TissueClass>& predicted) {
  if (truth.size() != predicted.size()) {
    throw InvalidArgument("truth and prediction lengths differ");
  }
  ConfusionMatrix m;
  for (size_t i = 0; i < truth.size(); ++i) ++m.at(ClassCode(truth[i]), ClassCode(predicted[i]));
  return m;
}

double Kappa(const ConfusionMatrix& m) {
  const double n = static_cast<double>(m.total());
  if (n <= 0) throw InvalidArgument("kappa of an empty confusion matrix");
  double agree = 0.0, chance = 0.0;
  for (int i = 0; i < m.k; ++i) {
    agree += m.at(i, i);
    double row = 0.0, col = 0.0;
    for (int j = 0; j < m.k; ++j) {
      row += m.at(i, j);
      col += m.at(j, i);
    }
    chance += (row / n) * (col / n);
  }
  const double po = agree / n;
  if (chance == 1.0) {
    if (po == 1.0) return 1.0;
    throw NumericError("kappa undefined: chance agreement is 1");
  }
  return (po - chance) / (1.0 - chance);
}

double RocAuc(const std::vector<double>& scores, const std::vector<bool>& positive) {
  if (scores.size() != positive.size()) throw InvalidArgument("score and label lengths differ");
  const auto ranks = AverageRanks(scores);
  double pos = 0.0, rank_sum = 0.0;
  for (size_t i = 0; i < scores.size(); ++i) {
    if (positive[i]) {
      pos += 1.0;
      rank_sum += ranks[i];
    }
  }
  const double neg = static_cast<double>(scores.size()) - pos;
  if (pos == 0.0 || neg == 0.0) return kNaN;
  return (rank_sum - pos * (pos + 1.0) / 2.0) / (pos * neg);
}

MetricReport ComputeMetrics(const std::vector<TissueClass>& truth,
                            const std::vector<TissueClass>& predicted,
                            const std::vector<ScoreRow>& scores) {
  if (truth.empty()) throw InvalidArgument("no instances to evaluate");
  if (truth.size() != predicted.size() || truth.size() != scores.size()) {
    throw InvalidArgument("truth, prediction and score lengths differ");
  }
  for (size_t i = 0; i < scores.size(); ++i) {
    double sum = 0.0;
    for (double s : scores[i]) sum += s;
    if (!(std::abs(sum - 1.0) <= 1e-6)) {
      throw InvalidArgument("score row " + std::to_string(i) + " sums to " + FormatDouble(sum));
    }
  }
  const ConfusionMatrix m = Confusion(truth, predicted);
  const double n = static_cast<double>(truth.size());
  MetricReport r;
  r.kappa = Kappa(m);
  double auc_weight = 0.0, auc_sum = 0.0;
  for (int c = 0; c < kNumTissueClasses; ++c) {
    double row = 0.0, col = 0.0;
    for (int j = 0; j < kNumTissueClasses; ++j) {
      row += m.at(c, j);
      col += m.at(j, c);
    }
    const double tp = m.at(c, c);
    const double fp = col - tp;
    const double fn = row - tp;
    const double tn = n - tp - fp - fn;
    const double precision = tp + fp > 0 ? tp / (tp + fp) : 0.0;
    const double recall = tp + fn > 0 ? tp / (tp + fn) : 0.0;
    const double f1 = precision + recall > 0 ? 2 * precision * recall / (precision + recall) : 0.0;
    // With no negatives there can be no false positives.
    const double specificity = tn + fp > 0 ? tn / (tn + fp) : 1.0;
    const double weight = row / n;
    r.support[c] = static_cast<int64_t>(row);
    r.class_f1[c] = f1;
    r.accuracy += tp;
    r.f1 += weight * f1;
    r.sensitivity += weight * recall;
    r.specificity += weight * specificity;
    if (row > 0 && row < n) {
      std::vector<double> s(truth.size());
      std::vector<bool> pos(truth.size());
      for (size_t i = 0; i < truth.size(); ++i) {
        s[i] = scores[i][c];
        pos[i] = ClassCode(truth[i]) == c;
      }
      auc_sum += row * RocAuc(s, pos);
      auc_weight += row;
    }
  }
  r.accuracy /= n;
  r.auc = auc_weight > 0 ? auc_sum / auc_weight : kNaN;
  return r;
}

std::vector<std::vector<size_t>> StratifiedFolds(const std::vector<TissueClass>& labels,
                                                 int folds, uint64_t seed) {
  if (folds < 2) throw InvalidArgument("cross-validation needs at least 2 folds");
  std::vector<std::vector<size_t>> members(kNumTissueClasses);
  for (size_t i = 0; i < labels.size(); ++i) members[ClassCode(labels[i])].push_back(i);
  for (int c = 0; c < kNumTissueClasses; ++c) {
    if (!members[c].empty() && members[c].size() < static_cast<size_t>(folds)) {
      throw InvalidArgument("class '" + std::string(ClassName(static_cast<TissueClass>(c))) +
                            "' has " + std::to_string(members[c].size()) +
                            " instances, fewer than " + std::to_string(folds) + " folds");
    }
  }
  std::vector<std::vector<size_t>> out(folds);
  size_t offset = 0;
  for (int c = 0; c < kNumTissueClasses; ++c) {
    Rng rng(MixSeed(seed, static_cast<uint64_t>(c)));
    rng.Shuffle(std::span<size_t>(members[c]));
    for (size_t i = 0; i < members[c].size(); ++i) out[(offset + i) % folds].push_back(members[c][i]);
    offset = (offset + members[c].size()) % folds;
  }
  for (auto& f : out) std::sort(f.begin(), f.end());
  return out;
}

std::vector<std::vector<size_t>> GroupFolds(const std::vector<std::string>& groups) {
  std::map<std::string, std::vector<size_t>> by_group;
  for (size_t i = 0; i < groups.size(); ++i) by_group[groups[i]].push_back(i);
  if (by_group.size() < 2) throw InvalidArgument("leave-one-out needs at least 2 groups");
  std::vector<std::vector<size_t>> out;
  for (auto& [id, members] : by_group) out.push_back(std::move(members));
  return out;
}

CrossValidationReport CrossValidate(const std::vector<TissueClass>& labels,
                                    const std::vector<std::vector<size_t>>& folds,
                                    const FoldRunner& run) {
  const size_t n = labels.size();
  std::vector<int> owner(n, -1);
  for (size_t f = 0; f < folds.size(); ++f) {
    for (size_t i : folds[f]) {
      if (i >= n || owner[i] >= 0) throw InvalidArgument("folds are not a partition");
      owner[i] = static_cast<int>(f);
    }
  }
  CrossValidationReport report;
  for (size_t f = 0; f < folds.size(); ++f) {
    std::vector<size_t> train;
    for (size_t i = 0; i < n; ++i) {
      if (owner[i] != static_cast<int>(f)) train.push_back(i);
    }
    const auto preds = run(train, folds[f]);
    if (preds.size() != folds[f].size()) {
      throw InvalidArgument("fold runner returned the wrong number of predictions");
    }
    std::vector<TissueClass> t, p;
    std::vector<ScoreRow> s;
    for (size_t j = 0; j < preds.size(); ++j) {
      const size_t i = folds[f][j];
      t.push_back(labels[i]);
      p.push_back(preds[j].label);
      s.push_back(preds[j].scores);
      report.predictions.push_back({i, static_cast<int>(f), labels[i], preds[j]});
    }
    report.folds.push_back(ComputeMetrics(t, p, s));
  }
  const double k = static_cast<double>(report.folds.size());
  MetricReport mean, var;
  ForEachMetric(mean, [](double& v) { v = 0.0; });
  ForEachMetric(var, [](double& v) { v = 0.0; });
  for (auto fold : report.folds) {
    std::vector<double> values;
    ForEachMetric(fold, [&](double& v) { values.push_back(v); });
    size_t i = 0;
    ForEachMetric(mean, [&](double& v) { v += values[i++]; });
  }
  ForEachMetric(mean, [&](double& v) { v /= k; });
  for (auto fold : report.folds) {
    std::vector<double> values, means;
    ForEachMetric(fold, [&](double& v) { values.push_back(v); });
    ForEachMetric(mean, [&](double& v) { means.push_back(v); });
    size_t i = 0;
    ForEachMetric(var, [&](double& v) {
      const double d = values[i] - means[i];
      v += d * d / std::max(1.0, k - 1.0);
      ++i;
    });
  }
  ForEachMetric(var, [](double& v) { v = std::sqrt(v); });
  for (const auto& fold : report.folds)
    for (int c = 0; c < kNumTissueClasses; ++c) mean.support[c] += fold.support[c];
  report.mean = mean;
  report.stddev = var;
  return report;
}

CrossValidationReport CrossValidateClassifier(const ClassifierSpec& spec,
                                              const TrainingSet& data,
                                              const std::vector<std::vector<size_t>>& folds) {
  return CrossValidate(data.labels, folds,
                       [&](const std::vector<size_t>& train, const std::vector<size_t>& test) {
                         TrainingSet subset;
                         for (size_t i : train) {
                           subset.features.push_back(data.features[i]);
                           subset.labels.push_back(data.labels[i]);
                         }
                         const ClassifierModel model = TrainClassifier(spec, subset);
                         std::vector<Prediction> out;
                         for (size_t i : test) out.push_back(PredictClassifier(model, data.features[i]));
                         return out;
                       });
}

double ChiSquareCdf(double x, double df) {
  if (!(df > 0.0)) throw InvalidArgument("chi-square degrees of freedom must be > 0");
  if (x <= 0.0) return 0.0;
  return boost::math::gamma_p(df / 2.0, x / 2.0);
}

double StudentizedRangeCdf(double q, int k) {
  if (k < 2) throw InvalidArgument("studentized range needs k >= 2");
  if (q <= 0.0) return 0.0;
  auto integrand = [&](double z) {
    const double inside = NormalCdf(z) - NormalCdf(z - q);
    return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi) * std::pow(inside, k - 1);
  };
  // The normal density is below 1e-19 outside [-9.5, 9.5 + q].
  const double value = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
      integrand, -9.5, 9.5 + q, 15, 1e-13);
  return std::clamp(k * value, 0.0, 1.0);
}

RankTestReport FriedmanNemenyi(const std::vector<std::vector<double>>& measurements,
                               double alpha, std::vector<std::string> names) {
  const int n = static_cast<int>(measurements.size());
  if (n < 2) throw InvalidArgument("rank test needs at least 2 datasets");
  const int k = static_cast<int>(measurements.front().size());
  if (k < 2) throw InvalidArgument("rank test needs at least 2 methods");
  if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidArgument("alpha must be in (0, 1)");
  RankTestReport r;
  r.datasets = n;
  r.methods = k;
  r.alpha = alpha;
  if (names.empty()) {
    for (int j = 0; j < k; ++j) names.push_back("m" + std::to_string(j));
  }
  if (static_cast<int>(names.size()) != k) throw InvalidArgument("method name count differs from k");
  r.names = std::move(names);

  std::vector<double> rank_sums(k, 0.0);
  double ties = 0.0;
  for (int i = 0; i < n; ++i) {
    const auto& row = measurements[i];
    if (static_cast<int>(row.size()) != k) {
      throw InvalidArgument("rank test row " + std::to_string(i) + " has " +
                            std::to_string(row.size()) + " entries, expected " + std::to_string(k));
    }
    std::vector<double> negated(k);
    for (int j = 0; j < k; ++j) {
      if (!std::isfinite(row[j])) throw InvalidArgument("rank test input has a non-finite entry");
      // Larger is better, so rank the negated values.
      negated[j] = -row[j];
    }
    const auto ranks = AverageRanks(negated, &ties);
    for (int j = 0; j < k; ++j) rank_sums[j] += ranks[j];
  }
  double sum_sq = 0.0;
  for (double rs : rank_sums) sum_sq += rs * rs;
  const double nk = static_cast<double>(n) * k;
  const double chi2 = 12.0 * sum_sq / (nk * (k + 1)) - 3.0 * n * (k + 1);
  const double correction = 1.0 - ties / (nk * (static_cast<double>(k) * k - 1.0));
  if (correction <= 1e-12) {
    r.statistic = 0.0;
    r.p_value = 1.0;
  } else {
    r.statistic = std::max(0.0, chi2 / correction);
    r.p_value = r.statistic > 0.0 ? boost::math::gamma_q((k - 1) / 2.0, r.statistic / 2.0) : 1.0;
  }
  for (double rs : rank_sums) r.mean_ranks.push_back(rs / n);
  const double se = std::sqrt(k * (k + 1.0) / (6.0 * n));
  r.nemenyi.assign(static_cast<size_t>(k) * k, 1.0);
  for (int a = 0; a < k; ++a) {
    for (int b = a + 1; b < k; ++b) {
      const double q = std::abs(r.mean_ranks[a] - r.mean_ranks[b]) / se;
      const double p = std::clamp(1.0 - StudentizedRangeCdf(q * std::numbers::sqrt2, k), 0.0, 1.0);
      r.nemenyi[static_cast<size_t>(a) * k + b] = p;
      r.nemenyi[static_cast<size_t>(b) * k + a] = p;
    }
  }
  return r;
}

std::string MetricsToJson(const MetricReport& report) { return MetricJson(report).dump(2) + "\n"; }

std::string CrossValidationToJson(const CrossValidationReport& report) {
  nlohmann::json j;
  j["folds"] = static_cast<int>(report.folds.size());
  j["mean"] = MetricJson(report.mean);
  j["std"] = MetricJson(report.stddev);
  nlohmann::json per = nlohmann::json::array();
  for (const auto& f : report.folds) per.push_back(MetricJson(f));
  j["per_fold"] = per;
  return j.dump(2) + "\n";
}

std::string PredictionsToCsv(const CrossValidationReport& report) {
  auto rows = report.predictions;
  std::sort(rows.begin(), rows.end(),
            [](const auto& a, const auto& b) { return a.instance < b.instance; });
  std::ostringstream out;
  out << "instance_id,true,pred,score0,score1,score2,score3\n";
  for (const auto& p : rows) {
    out << p.instance << ',' << ClassCode(p.truth) << ',' << ClassCode(p.prediction.label);
    for (double s : p.prediction.scores) out << ',' << FormatDouble(s);
    out << '\n';
  }
  return out.str();
}

std::string RankTestToJson(const RankTestReport& r) {
  nlohmann::json j;
  j["datasets"] = r.datasets;
  j["methods"] = r.names;
  j["mean_ranks"] = r.mean_ranks;
  j["statistic"] = r.statistic;
  j["p_value"] = r.p_value;
  j["alpha"] = r.alpha;
  j["reject_null"] = r.p_value < r.alpha;
  nlohmann::json matrix = nlohmann::json::array();
  for (int a = 0; a < r.methods; ++a) {
    std::vector<double> row;
    for (int b = 0; b < r.methods; ++b) row.push_back(r.nemenyi_p(a, b));
    matrix.push_back(row);
  }
  j["nemenyi_p"] = matrix;
  nlohmann::json bands = nlohmann::json::object();
  for (double level : {0.01, 0.05, 0.10}) {
    nlohmann::json pairs = nlohmann::json::array();
    for (int a = 0; a < r.methods; ++a)
      for (int b = a + 1; b < r.methods; ++b)
        if (r.nemenyi_p(a, b) < level) pairs.push_back({r.names[a], r.names[b]});
    bands[FormatDouble(level)] = pairs;
  }
  j["significant_pairs"] = bands;
  return j.dump(2) + "\n";
}

ResultsMatrix ParseResultsCsv(const std::string& text) {
  const auto lines = SplitLines(text);
  ResultsMatrix m;
  size_t line_no = 0;
  for (const auto& line : lines) {
    ++line_no;
    if (Trim(line).empty()) continue;
    auto fields = SplitCsvLine(line);
    for (auto& f : fields) f = std::string(Trim(f));
    if (m.methods.empty()) {
      if (fields.size() < 3) throw DataError("results CSV header needs dataset and >= 2 methods");
      m.methods.assign(fields.begin() + 1, fields.end());
      continue;
    }
    if (fields.size() != m.methods.size() + 1) {
      throw DataError("results CSV line " + std::to_string(line_no) + ": expected " +
                      std::to_string(m.methods.size() + 1) + " fields");
    }
    std::vector<double> row;
    for (size_t i = 1; i < fields.size(); ++i) {
      const auto v = ParseDouble(fields[i]);
      if (!v || !std::isfinite(*v)) {
        throw DataError("results CSV line " + std::to_string(line_no) + ": bad value '" +
                        fields[i] + "'");
      }
      row.push_back(*v);
    }
    m.datasets.push_back(fields[0]);
    m.values.push_back(std::move(row));
  }
  if (m.methods.empty()) throw DataError("results CSV is empty");
  return m;
}

}  // namespace ulcerseg
