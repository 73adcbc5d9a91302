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

#include "ulcerseg/neural.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <limits>
#include <numeric>

#include "json.hpp"
#include "ulcerseg/error.hpp"
#include "ulcerseg/parallel.hpp"
#include "ulcerseg/random.hpp"

namespace ulcerseg {
namespace {

// Activations are stored one sample per column.
using Mat = Eigen::MatrixXd;
using RMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vec = Eigen::VectorXd;

struct Shape {
  int c = 0;
  int h = 0;
  int w = 0;
  int size() const { return c * h * w; }
};

struct LayerState {
  LayerSpec spec;
  Shape in;
  Shape out;
  // Index of the weight tensor (bias follows), -1 for parameter-free layers.
  int param = -1;

  // Backward caches, filled by training-mode forward passes.
  std::vector<RMat> cols;
  Mat input;
  std::vector<int> argmax;
  Mat mask;
};

enum class DropoutMode { kOff, kDraw, kFixed };

std::string FormatNumber(double value) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, ptr);
}

std::vector<LayerState> BuildLayers(const NetworkSpec& spec) {
  if (spec.input_size < 1 || spec.input_channels < 1) {
    throw InvalidArgument("network input must be at least 1x1x1");
  }
  const auto layers = spec.layers();
  if (layers.empty() || layers.back().kind != LayerKind::kDense) {
    throw InvalidArgument("network must end with a dense layer");
  }
  std::vector<LayerState> out;
  Shape shape{spec.input_channels, spec.input_size, spec.input_size};
  int param = 0;
  for (const auto& layer : layers) {
    LayerState state;
    state.spec = layer;
    state.in = shape;
    switch (layer.kind) {
      case LayerKind::kConv:
        if (layer.units < 1) throw InvalidArgument("conv layer needs >= 1 channel");
        shape.c = layer.units;
        state.param = param;
        param += 2;
        break;
      case LayerKind::kDense:
        if (layer.units < 1) throw InvalidArgument("dense layer needs >= 1 unit");
        shape = {layer.units, 1, 1};
        state.param = param;
        param += 2;
        break;
      case LayerKind::kMaxPool:
        if (shape.h < 2 || shape.w < 2) {
          throw InvalidArgument("max-pool applied to a " + std::to_string(shape.h) +
                                "x" + std::to_string(shape.w) + " map");
        }
        shape.h /= 2;
        shape.w /= 2;
        break;
      case LayerKind::kDropout:
        if (!(layer.rate >= 0.0 && layer.rate < 1.0)) {
          throw InvalidArgument("dropout rate must be in [0, 1)");
        }
        break;
      case LayerKind::kRelu:
        break;
    }
    state.out = shape;
    out.push_back(std::move(state));
  }
  return out;
}

size_t WeightSize(const LayerState& layer) {
  const size_t fan_in = layer.spec.kind == LayerKind::kConv
                            ? static_cast<size_t>(layer.in.c) * 9
                            : static_cast<size_t>(layer.in.size());
  return fan_in * layer.spec.units;
}

void CheckWeights(const std::vector<LayerState>& layers,
                  const std::vector<std::vector<double>>& weights) {
  size_t expected = 0;
  for (const auto& layer : layers) {
    if (layer.param < 0) continue;
    if (weights.size() < expected + 2 ||
        weights[expected].size() != WeightSize(layer) ||
        weights[expected + 1].size() != static_cast<size_t>(layer.spec.units)) {
      throw InvalidArgument("weight tensors do not match the network spec");
    }
    expected += 2;
  }
  if (weights.size() != expected) {
    throw InvalidArgument("weight tensors do not match the network spec");
  }
}

void Im2Col(const double* x, const Shape& s, RMat& cols) {
  const int hw = s.h * s.w;
  cols.resize(static_cast<Eigen::Index>(s.c) * 9, hw);
  for (int c = 0; c < s.c; ++c) {
    const double* plane = x + static_cast<size_t>(c) * hw;
    for (int ky = 0; ky < 3; ++ky) {
      for (int kx = 0; kx < 3; ++kx) {
        double* row = cols.row(c * 9 + ky * 3 + kx).data();
        for (int y = 0; y < s.h; ++y) {
          const int sy = y + ky - 1;
          double* dst = row + static_cast<size_t>(y) * s.w;
          if (sy < 0 || sy >= s.h) {
            std::fill(dst, dst + s.w, 0.0);
            continue;
          }
          const double* src = plane + static_cast<size_t>(sy) * s.w;
          for (int xx = 0; xx < s.w; ++xx) {
            const int sx = xx + kx - 1;
            dst[xx] = (sx >= 0 && sx < s.w) ? src[sx] : 0.0;
          }
        }
      }
    }
  }
}

void Col2Im(const RMat& cols, const Shape& s, double* x) {
  const int hw = s.h * s.w;
  std::fill(x, x + static_cast<size_t>(s.c) * hw, 0.0);
  for (int c = 0; c < s.c; ++c) {
    double* plane = x + static_cast<size_t>(c) * hw;
    for (int ky = 0; ky < 3; ++ky) {
      for (int kx = 0; kx < 3; ++kx) {
        const double* row = cols.row(c * 9 + ky * 3 + kx).data();
        for (int y = 0; y < s.h; ++y) {
          const int sy = y + ky - 1;
          if (sy < 0 || sy >= s.h) continue;
          const double* src = row + static_cast<size_t>(y) * s.w;
          double* dst = plane + static_cast<size_t>(sy) * s.w;
          for (int xx = 0; xx < s.w; ++xx) {
            const int sx = xx + kx - 1;
            if (sx >= 0 && sx < s.w) dst[sx] += src[xx];
          }
        }
      }
    }
  }
}

struct ForwardOptions {
  bool keep_cache = false;
  DropoutMode dropout = DropoutMode::kOff;
  Rng* rng = nullptr;
  const DropoutMasks* masks = nullptr;
  // When set, receives the activation pattern (ReLU signs, pool winners)
  // that decides which piecewise-linear region the pass is in.
  std::vector<int>* pattern = nullptr;
};

Mat Forward(std::vector<LayerState>& layers,
            const std::vector<std::vector<double>>& weights, Mat x,
            const ForwardOptions& options) {
  const Eigen::Index batch = x.cols();
  size_t dropout_index = 0;
  for (auto& layer : layers) {
    switch (layer.spec.kind) {
      case LayerKind::kConv: {
        const int o = layer.spec.units;
        const int hw = layer.in.h * layer.in.w;
        Eigen::Map<const RMat> w(weights[layer.param].data(), o, layer.in.c * 9);
        Eigen::Map<const Vec> b(weights[layer.param + 1].data(), o);
        Mat y(static_cast<Eigen::Index>(o) * hw, batch);
        if (options.keep_cache) layer.cols.resize(batch);
        RMat cols;
        for (Eigen::Index j = 0; j < batch; ++j) {
          RMat& c = options.keep_cache ? layer.cols[j] : cols;
          Im2Col(x.col(j).data(), layer.in, c);
          Eigen::Map<RMat> yj(y.col(j).data(), o, hw);
          yj.noalias() = w * c;
          yj.colwise() += b;
        }
        x = std::move(y);
        break;
      }
      case LayerKind::kDense: {
        const int o = layer.spec.units;
        Eigen::Map<const RMat> w(weights[layer.param].data(), o, layer.in.size());
        Eigen::Map<const Vec> b(weights[layer.param + 1].data(), o);
        Mat y = w * x;
        y.colwise() += b;
        if (options.keep_cache) layer.input = std::move(x);
        x = std::move(y);
        break;
      }
      case LayerKind::kRelu: {
        Mat y = x.cwiseMax(0.0);
        if (options.pattern) {
          for (Eigen::Index i = 0; i < x.size(); ++i) {
            options.pattern->push_back(x.data()[i] > 0.0);
          }
        }
        if (options.keep_cache) layer.input = std::move(x);
        x = std::move(y);
        break;
      }
      case LayerKind::kMaxPool: {
        const Shape& in = layer.in;
        const Shape& out = layer.out;
        Mat y(out.size(), batch);
        if (options.keep_cache) layer.argmax.assign(static_cast<size_t>(out.size()) * batch, 0);
        for (Eigen::Index j = 0; j < batch; ++j) {
          const double* src = x.col(j).data();
          double* dst = y.col(j).data();
          for (int c = 0; c < out.c; ++c) {
            for (int oy = 0; oy < out.h; ++oy) {
              for (int ox = 0; ox < out.w; ++ox) {
                int best = (c * in.h + 2 * oy) * in.w + 2 * ox;
                for (int dy = 0; dy < 2; ++dy) {
                  for (int dx = 0; dx < 2; ++dx) {
                    const int idx = (c * in.h + 2 * oy + dy) * in.w + 2 * ox + dx;
                    if (src[idx] > src[best]) best = idx;
                  }
                }
                const int o = (c * out.h + oy) * out.w + ox;
                dst[o] = src[best];
                if (options.pattern) options.pattern->push_back(best);
                if (options.keep_cache) {
                  layer.argmax[static_cast<size_t>(j) * out.size() + o] = best;
                }
              }
            }
          }
        }
        x = std::move(y);
        break;
      }
      case LayerKind::kDropout: {
        if (options.dropout == DropoutMode::kOff) {
          layer.mask.resize(0, 0);
          break;
        }
        Mat mask(x.rows(), batch);
        if (options.dropout == DropoutMode::kFixed) {
          const auto& m = (*options.masks)[dropout_index];
          if (m.size() != static_cast<size_t>(mask.size())) {
            throw InvalidArgument("dropout mask size does not match the batch");
          }
          std::copy(m.begin(), m.end(), mask.data());
        } else {
          const double keep = 1.0 / (1.0 - layer.spec.rate);
          for (Eigen::Index i = 0; i < mask.size(); ++i) {
            mask.data()[i] = options.rng->Uniform() >= layer.spec.rate ? keep : 0.0;
          }
        }
        x = x.cwiseProduct(mask);
        layer.mask = std::move(mask);
        ++dropout_index;
        break;
      }
    }
  }
  return x;
}

// Returns the summed (not averaged) loss; writes d(sum loss)/d(logits)
// scaled by `grad_scale` when `grad` is given.
double LossSum(const Mat& logits, std::span<const int> targets, LossKind kind,
               Mat* grad, double grad_scale) {
  double total = 0.0;
  if (grad) grad->resize(logits.rows(), logits.cols());
  for (Eigen::Index j = 0; j < logits.cols(); ++j) {
    const int t = targets[j];
    if (kind == LossKind::kCrossEntropy) {
      const double m = logits.col(j).maxCoeff();
      const Vec e = (logits.col(j).array() - m).exp().matrix();
      const double sum = e.sum();
      total += m + std::log(sum) - logits(t, j);
      if (grad) {
        grad->col(j) = e / sum;
        (*grad)(t, j) -= 1.0;
        grad->col(j) *= grad_scale;
      }
    } else {
      Vec diff = logits.col(j);
      diff(t) -= 1.0;
      total += 0.5 * diff.squaredNorm();
      if (grad) grad->col(j) = diff * grad_scale;
    }
  }
  return total;
}

std::vector<std::vector<double>> Backward(std::vector<LayerState>& layers,
                                          const std::vector<std::vector<double>>& weights,
                                          Mat d) {
  std::vector<std::vector<double>> grads(weights.size());
  for (size_t i = 0; i < weights.size(); ++i) grads[i].assign(weights[i].size(), 0.0);
  const Eigen::Index batch = d.cols();
  for (auto it = layers.rbegin(); it != layers.rend(); ++it) {
    LayerState& layer = *it;
    switch (layer.spec.kind) {
      case LayerKind::kConv: {
        const int o = layer.spec.units;
        const int hw = layer.in.h * layer.in.w;
        const int k = layer.in.c * 9;
        Eigen::Map<const RMat> w(weights[layer.param].data(), o, k);
        Eigen::Map<RMat> gw(grads[layer.param].data(), o, k);
        Eigen::Map<Vec> gb(grads[layer.param + 1].data(), o);
        Mat din(layer.in.size(), batch);
        RMat dcols;
        for (Eigen::Index j = 0; j < batch; ++j) {
          Eigen::Map<const RMat> dj(d.col(j).data(), o, hw);
          gw.noalias() += dj * layer.cols[j].transpose();
          gb += dj.rowwise().sum();
          dcols.noalias() = w.transpose() * dj;
          Col2Im(dcols, layer.in, din.col(j).data());
        }
        d = std::move(din);
        break;
      }
      case LayerKind::kDense: {
        const int o = layer.spec.units;
        Eigen::Map<const RMat> w(weights[layer.param].data(), o, layer.in.size());
        Eigen::Map<RMat> gw(grads[layer.param].data(), o, layer.in.size());
        Eigen::Map<Vec> gb(grads[layer.param + 1].data(), o);
        gw.noalias() = d * layer.input.transpose();
        gb = d.rowwise().sum();
        Mat din = w.transpose() * d;
        d = std::move(din);
        break;
      }
      case LayerKind::kRelu:
        d = d.cwiseProduct((layer.input.array() > 0.0).cast<double>().matrix());
        break;
      case LayerKind::kMaxPool: {
        Mat din = Mat::Zero(layer.in.size(), batch);
        const int out_size = layer.out.size();
        for (Eigen::Index j = 0; j < batch; ++j) {
          for (int o = 0; o < out_size; ++o) {
            din(layer.argmax[static_cast<size_t>(j) * out_size + o], j) += d(o, j);
          }
        }
        d = std::move(din);
        break;
      }
      case LayerKind::kDropout:
        if (layer.mask.size() > 0) d = d.cwiseProduct(layer.mask);
        break;
    }
  }
  return grads;
}

Mat InputMatrix(std::span<const double> inputs, size_t count, int dim) {
  if (inputs.size() != count * static_cast<size_t>(dim)) {
    throw InvalidArgument("network input has " + std::to_string(inputs.size()) +
                          " values, expected " +
                          std::to_string(count * static_cast<size_t>(dim)));
  }
  return Eigen::Map<const Mat>(inputs.data(), dim, static_cast<Eigen::Index>(count));
}

void CheckTargets(std::span<const int> targets, int outputs) {
  for (int t : targets) {
    if (t < 0 || t >= outputs) {
      throw InvalidArgument("target " + std::to_string(t) + " outside [0, " +
                            std::to_string(outputs) + ")");
    }
  }
}

double MeanLoss(const NetworkModel& model, std::span<const double> inputs,
                std::span<const int> targets, LossKind kind, const DropoutMasks* masks,
                std::vector<int>* pattern) {
  auto layers = BuildLayers(model.spec);
  ForwardOptions options;
  options.pattern = pattern;
  if (masks) {
    options.dropout = DropoutMode::kFixed;
    options.masks = masks;
  }
  const Mat logits = Forward(layers, model.weights,
                             InputMatrix(inputs, targets.size(), InputDim(model.spec)),
                             options);
  return LossSum(logits, targets, kind, nullptr, 0.0) / static_cast<double>(targets.size());
}

// Mean loss of a sample source in inference mode.
double SourceLoss(const NetworkModel& model, const SampleSource& source) {
  auto layers = BuildLayers(model.spec);
  const int dim = InputDim(model.spec);
  constexpr size_t kChunk = 128;
  double total = 0.0;
  std::vector<int> targets;
  for (size_t start = 0; start < source.size(); start += kChunk) {
    const size_t count = std::min(kChunk, source.size() - start);
    Mat x(dim, static_cast<Eigen::Index>(count));
    targets.resize(count);
    for (size_t j = 0; j < count; ++j) {
      targets[j] = source.Get(start + j, std::span<double>(x.col(j).data(), dim));
    }
    CheckTargets(targets, model.spec.outputs());
    const Mat logits = Forward(layers, model.weights, std::move(x), {});
    total += LossSum(logits, targets, LossKind::kCrossEntropy, nullptr, 0.0);
  }
  return total / static_cast<double>(source.size());
}

}  // namespace

std::string FormatLayer(const LayerSpec& layer) {
  switch (layer.kind) {
    case LayerKind::kConv:
      return "conv" + std::to_string(layer.units);
    case LayerKind::kRelu:
      return "relu";
    case LayerKind::kMaxPool:
      return "pool";
    case LayerKind::kDense:
      return "dense" + std::to_string(layer.units);
    case LayerKind::kDropout:
      return "dropout" + FormatNumber(layer.rate);
  }
  return "relu";
}

LayerSpec ParseLayer(std::string_view text) {
  auto parse_int = [&](std::string_view rest) {
    int value = 0;
    auto [ptr, ec] = std::from_chars(rest.data(), rest.data() + rest.size(), value);
    if (ec != std::errc() || ptr != rest.data() + rest.size() || value < 1) {
      throw InvalidArgument("bad layer '" + std::string(text) + "'");
    }
    return value;
  };
  if (text == "relu") return LayerSpec::Relu();
  if (text == "pool" || text == "maxpool") return LayerSpec::MaxPool();
  if (text.starts_with("conv")) return LayerSpec::Conv(parse_int(text.substr(4)));
  if (text.starts_with("dense")) return LayerSpec::Dense(parse_int(text.substr(5)));
  if (text.starts_with("dropout")) {
    const std::string_view rest = text.substr(7);
    double rate = 0.0;
    auto [ptr, ec] = std::from_chars(rest.data(), rest.data() + rest.size(), rate);
    if (ec != std::errc() || ptr != rest.data() + rest.size() || !(rate >= 0.0 && rate < 1.0)) {
      throw InvalidArgument("bad layer '" + std::string(text) + "'");
    }
    return LayerSpec::Dropout(rate);
  }
  throw InvalidArgument("unknown layer '" + std::string(text) + "'");
}

std::vector<LayerSpec> ParseLayers(std::string_view text) {
  std::vector<LayerSpec> out;
  while (!text.empty()) {
    const size_t comma = text.find(',');
    std::string_view item = text.substr(0, comma);
    while (!item.empty() && item.front() == ' ') item.remove_prefix(1);
    while (!item.empty() && item.back() == ' ') item.remove_suffix(1);
    if (!item.empty()) out.push_back(ParseLayer(item));
    if (comma == std::string_view::npos) break;
    text.remove_prefix(comma + 1);
  }
  return out;
}

std::string FormatLayers(const std::vector<LayerSpec>& layers) {
  std::string out;
  for (size_t i = 0; i < layers.size(); ++i) {
    if (i) out += ",";
    out += FormatLayer(layers[i]);
  }
  return out;
}

std::vector<LayerSpec> NetworkSpec::layers() const {
  std::vector<LayerSpec> out = backbone;
  out.insert(out.end(), head.begin(), head.end());
  return out;
}

int NetworkSpec::outputs() const {
  return head.empty() ? (backbone.empty() ? 0 : backbone.back().units) : head.back().units;
}

std::vector<LayerSpec> DefaultBackbone() {
  return {LayerSpec::Conv(8), LayerSpec::Relu(), LayerSpec::MaxPool(),
          LayerSpec::Conv(16), LayerSpec::Relu(), LayerSpec::MaxPool()};
}

std::vector<LayerSpec> QtduHead(int width) {
  return {LayerSpec::Dense(width), LayerSpec::Relu(), LayerSpec::Dropout(0.5),
          LayerSpec::Dense(width), LayerSpec::Relu(), LayerSpec::Dropout(0.5),
          LayerSpec::Dense(kNumTissueClasses)};
}

NetworkSpec QtduSpec(int input_size, std::vector<LayerSpec> backbone, int head_width) {
  NetworkSpec spec;
  spec.input_size = input_size;
  spec.input_channels = 3;
  spec.backbone = std::move(backbone);
  spec.head = QtduHead(head_width);
  return spec;
}

bool IsQtduHead(const std::vector<LayerSpec>& head) {
  if (head.size() != 7 || head[0].kind != LayerKind::kDense) return false;
  return head == QtduHead(head[0].units) && head[3].units == head[0].units;
}

void ValidateNetworkSpec(const NetworkSpec& spec) { BuildLayers(spec); }

int InputDim(const NetworkSpec& spec) {
  return spec.input_channels * spec.input_size * spec.input_size;
}

void ValidateTrainConfig(const TrainConfig& config) {
  if (!(config.learning_rate >= 0.0) || !std::isfinite(config.learning_rate)) {
    throw InvalidArgument("learning_rate must be finite and >= 0");
  }
  if (!(config.momentum >= 0.0 && config.momentum < 1.0)) {
    throw InvalidArgument("momentum must be in [0, 1)");
  }
  if (config.batch_size < 1) throw InvalidArgument("batch_size must be >= 1");
  if (config.max_epochs < 1) throw InvalidArgument("max_epochs must be >= 1");
  if (config.patience < 1 || config.patience > config.max_epochs) {
    throw InvalidArgument("patience must be in [1, max_epochs]");
  }
  if (!(config.min_delta >= 0.0)) throw InvalidArgument("min_delta must be >= 0");
}

VectorSource::VectorSource(std::vector<std::vector<double>> inputs,
                           std::vector<int> targets)
    : inputs_(std::move(inputs)), targets_(std::move(targets)) {
  if (inputs_.size() != targets_.size()) {
    throw InvalidArgument("input and target counts differ");
  }
}

int VectorSource::Get(size_t index, std::span<double> input) const {
  const auto& src = inputs_.at(index);
  if (src.size() != input.size()) {
    throw InvalidArgument("sample " + std::to_string(index) + " has dimension " +
                          std::to_string(src.size()) + ", network expects " +
                          std::to_string(input.size()));
  }
  std::copy(src.begin(), src.end(), input.begin());
  return targets_[index];
}

void PatchToInput(const Patch& patch, std::span<double> out) {
  const size_t n = static_cast<size_t>(patch.width) * patch.height;
  if (out.size() != 3 * n || patch.pixels.size() != n) {
    throw InvalidArgument("patch of " + std::to_string(patch.width) + "x" +
                          std::to_string(patch.height) +
                          " does not match the network input");
  }
  for (size_t i = 0; i < n; ++i) {
    out[i] = patch.pixels[i].r / 255.0 - 0.5;
    out[n + i] = patch.pixels[i].g / 255.0 - 0.5;
    out[2 * n + i] = patch.pixels[i].b / 255.0 - 0.5;
  }
}

std::vector<double> PatchToInput(const Patch& patch) {
  std::vector<double> out(3 * static_cast<size_t>(patch.width) * patch.height);
  PatchToInput(patch, out);
  return out;
}

NetworkModel InitializeNetwork(const NetworkSpec& spec, uint64_t seed) {
  const auto layers = BuildLayers(spec);
  NetworkModel model;
  model.spec = spec;
  Rng rng(MixSeed(seed, 0x1a17));
  for (const auto& layer : layers) {
    if (layer.param < 0) continue;
    const size_t size = WeightSize(layer);
    const double fan_in = static_cast<double>(size / layer.spec.units);
    const double limit = std::sqrt(6.0 / fan_in);
    std::vector<double> w(size);
    for (double& v : w) v = rng.Uniform(-limit, limit);
    model.weights.push_back(std::move(w));
    model.weights.emplace_back(layer.spec.units, 0.0);
  }
  return model;
}

void SgdStep(std::span<double> weights, std::span<const double> grads,
             std::span<double> velocity, double learning_rate, double momentum) {
  for (size_t i = 0; i < weights.size(); ++i) {
    velocity[i] = momentum * velocity[i] - learning_rate * grads[i];
    weights[i] += velocity[i];
  }
}

NetworkModel Train(const NetworkSpec& spec, const TrainConfig& config,
                   const SampleSource& train, const SampleSource& val) {
  ValidateNetworkSpec(spec);
  return Train(InitializeNetwork(spec, config.seed), config, train, val);
}

NetworkModel Train(const NetworkModel& initial, const TrainConfig& config,
                   const SampleSource& train, const SampleSource& val) {
  ValidateTrainConfig(config);
  auto layers = BuildLayers(initial.spec);
  CheckWeights(layers, initial.weights);
  if (train.size() == 0) throw TrainingError(0, "no training samples");

  const int dim = InputDim(initial.spec);
  const int outputs = initial.spec.outputs();
  NetworkModel model = initial;
  model.history.clear();
  NetworkModel best = model;
  double best_loss = std::numeric_limits<double>::infinity();
  int since_best = 0;

  std::vector<std::vector<double>> velocity(model.weights.size());
  for (size_t i = 0; i < velocity.size(); ++i) velocity[i].assign(model.weights[i].size(), 0.0);
  Rng dropout_rng(MixSeed(config.seed, 0xd80f));
  std::vector<size_t> order(train.size());
  std::vector<int> targets;

  for (int epoch = 0; epoch < config.max_epochs; ++epoch) {
    std::iota(order.begin(), order.end(), size_t{0});
    Rng shuffle_rng(MixSeed(config.seed, static_cast<uint64_t>(epoch) + 1));
    shuffle_rng.Shuffle(std::span<size_t>(order));

    double epoch_loss = 0.0;
    for (size_t start = 0; start < order.size(); start += config.batch_size) {
      const size_t count = std::min<size_t>(config.batch_size, order.size() - start);
      Mat x(dim, static_cast<Eigen::Index>(count));
      targets.resize(count);
      for (size_t j = 0; j < count; ++j) {
        targets[j] = train.Get(order[start + j], std::span<double>(x.col(j).data(), dim));
      }
      for (int t : targets) {
        if (t < 0 || t >= outputs) {
          throw TrainingError(epoch + 1, "target " + std::to_string(t) +
                                             " outside the network's " +
                                             std::to_string(outputs) + " outputs");
        }
      }
      ForwardOptions options;
      options.keep_cache = true;
      options.dropout = DropoutMode::kDraw;
      options.rng = &dropout_rng;
      const Mat logits = Forward(layers, model.weights, std::move(x), options);
      Mat dlogits;
      const double loss = LossSum(logits, targets, LossKind::kCrossEntropy, &dlogits,
                                  1.0 / static_cast<double>(count));
      if (!std::isfinite(loss)) {
        throw TrainingError(epoch + 1, "training loss is not finite");
      }
      epoch_loss += loss;
      const auto grads = Backward(layers, model.weights, std::move(dlogits));
      for (size_t i = 0; i < model.weights.size(); ++i) {
        SgdStep(model.weights[i], grads[i], velocity[i], config.learning_rate,
                config.momentum);
      }
    }
    EpochStats stats;
    stats.train_loss = epoch_loss / static_cast<double>(train.size());
    stats.val_loss = val.size() > 0 ? SourceLoss(model, val) : stats.train_loss;
    if (!std::isfinite(stats.train_loss) || !std::isfinite(stats.val_loss)) {
      throw TrainingError(epoch + 1, "loss is not finite");
    }
    model.history.push_back(stats);
    if (best_loss - stats.val_loss >= config.min_delta || epoch == 0) {
      best_loss = stats.val_loss;
      best.weights = model.weights;
      best.best_epoch = epoch;
      since_best = 0;
    } else if (++since_best >= config.patience) {
      break;
    }
  }
  best.history = model.history;
  return best;
}

std::vector<std::vector<double>> PredictScoresBatch(const NetworkModel& model,
                                                    std::span<const double> inputs,
                                                    size_t count) {
  const int dim = InputDim(model.spec);
  const Mat all = InputMatrix(inputs, count, dim);
  {
    const auto layers = BuildLayers(model.spec);
    CheckWeights(layers, model.weights);
  }
  constexpr size_t kChunk = 64;
  const size_t chunks = (count + kChunk - 1) / kChunk;
  std::vector<std::vector<double>> out(count);
  ParallelFor(chunks, [&](size_t chunk) {
    auto layers = BuildLayers(model.spec);
    const size_t start = chunk * kChunk;
    const size_t n = std::min(kChunk, count - start);
    const Mat logits = Forward(layers, model.weights,
                               all.middleCols(static_cast<Eigen::Index>(start),
                                              static_cast<Eigen::Index>(n)),
                               {});
    for (size_t j = 0; j < n; ++j) {
      const Vec z = logits.col(static_cast<Eigen::Index>(j));
      const Vec e = (z.array() - z.maxCoeff()).exp().matrix();
      const Vec p = e / e.sum();
      out[start + j].assign(p.data(), p.data() + p.size());
    }
  });
  return out;
}

std::vector<double> PredictScores(const NetworkModel& model,
                                  std::span<const double> input) {
  return PredictScoresBatch(model, input, 1).front();
}

Prediction Predict(const NetworkModel& model, const Patch& patch) {
  if (model.spec.outputs() != kNumTissueClasses) {
    throw InvalidArgument("patch prediction needs a four-output network");
  }
  if (patch.width != model.spec.input_size || patch.height != model.spec.input_size) {
    throw InvalidArgument("patch is " + std::to_string(patch.width) + "x" +
                          std::to_string(patch.height) + ", network expects " +
                          std::to_string(model.spec.input_size) + "x" +
                          std::to_string(model.spec.input_size));
  }
  const auto scores = PredictScores(model, PatchToInput(patch));
  std::array<double, kNumTissueClasses> s{};
  std::copy(scores.begin(), scores.end(), s.begin());
  return FromScores(s);
}

DropoutMasks DrawDropoutMasks(const NetworkSpec& spec, size_t batch, uint64_t seed) {
  const auto layers = BuildLayers(spec);
  Rng rng(seed);
  DropoutMasks masks;
  for (const auto& layer : layers) {
    if (layer.spec.kind != LayerKind::kDropout) continue;
    const double keep = 1.0 / (1.0 - layer.spec.rate);
    std::vector<double> m(static_cast<size_t>(layer.in.size()) * batch);
    for (double& v : m) v = rng.Uniform() >= layer.spec.rate ? keep : 0.0;
    masks.push_back(std::move(m));
  }
  return masks;
}

LossAndGradients ComputeGradients(const NetworkModel& model,
                                  std::span<const double> inputs,
                                  std::span<const int> targets, LossKind loss,
                                  const DropoutMasks* masks) {
  auto layers = BuildLayers(model.spec);
  CheckWeights(layers, model.weights);
  if (targets.empty()) throw InvalidArgument("empty batch");
  CheckTargets(targets, model.spec.outputs());
  ForwardOptions options;
  options.keep_cache = true;
  if (masks) {
    options.dropout = DropoutMode::kFixed;
    options.masks = masks;
  }
  const Mat logits = Forward(layers, model.weights,
                             InputMatrix(inputs, targets.size(), InputDim(model.spec)),
                             options);
  Mat d;
  const double n = static_cast<double>(targets.size());
  LossAndGradients out;
  out.loss = LossSum(logits, targets, loss, &d, 1.0 / n) / n;
  out.gradients = Backward(layers, model.weights, std::move(d));
  return out;
}

std::vector<double> SoftmaxCrossEntropyGradient(std::span<const double> logits,
                                                int target) {
  Mat z = Eigen::Map<const Mat>(logits.data(), static_cast<Eigen::Index>(logits.size()), 1);
  Mat d;
  const int t[] = {target};
  CheckTargets(t, static_cast<int>(logits.size()));
  LossSum(z, t, LossKind::kCrossEntropy, &d, 1.0);
  return std::vector<double>(d.data(), d.data() + d.size());
}

double GradientCheckReport::worst() const {
  return max_relative_error.empty()
             ? 0.0
             : *std::max_element(max_relative_error.begin(), max_relative_error.end());
}

GradientCheckReport GradientCheck(const NetworkModel& model,
                                  std::span<const double> inputs,
                                  std::span<const int> targets, double epsilon,
                                  uint64_t seed, LossKind loss, int samples_per_layer) {
  if (!(epsilon >= 1e-6 && epsilon <= 1e-3)) {
    throw InvalidArgument("gradient-check epsilon must be in [1e-6, 1e-3]");
  }
  const DropoutMasks masks =
      DrawDropoutMasks(model.spec, targets.size(), MixSeed(seed, 1));
  const LossAndGradients analytic = ComputeGradients(model, inputs, targets, loss, &masks);
  if (!std::isfinite(analytic.loss)) throw NumericError("gradient check: loss is not finite");

  std::vector<int> base_pattern;
  MeanLoss(model, inputs, targets, loss, &masks, &base_pattern);

  const auto layers = BuildLayers(model.spec);
  Rng pick(MixSeed(seed, 2));
  NetworkModel probe = model;
  GradientCheckReport report;
  std::vector<int> pattern;
  for (size_t li = 0; li < layers.size(); ++li) {
    const LayerState& layer = layers[li];
    if (layer.param < 0) continue;
    const size_t wsize = model.weights[layer.param].size();
    const size_t total = wsize + model.weights[layer.param + 1].size();
    std::vector<size_t> order(total);
    std::iota(order.begin(), order.end(), size_t{0});
    pick.Shuffle(std::span<size_t>(order));
    const size_t want = std::min(total, static_cast<size_t>(std::max(samples_per_layer, 0)));
    double worst = 0.0;
    size_t checked = 0;
    int skipped = 0;
    for (size_t k = 0; k < total && checked < want; ++k) {
      const size_t flat = order[k];
      const int tensor = flat < wsize ? layer.param : layer.param + 1;
      const size_t idx = flat < wsize ? flat : flat - wsize;
      double& w = probe.weights[tensor][idx];
      const double original = w;
      const double plus = original + epsilon;
      const double minus = original - epsilon;
      bool crosses_kink = false;
      w = plus;
      pattern.clear();
      const double lp = MeanLoss(probe, inputs, targets, loss, &masks, &pattern);
      crosses_kink |= pattern != base_pattern;
      w = minus;
      pattern.clear();
      const double lm = MeanLoss(probe, inputs, targets, loss, &masks, &pattern);
      crosses_kink |= pattern != base_pattern;
      w = original;
      if (!std::isfinite(lp) || !std::isfinite(lm)) {
        throw NumericError("gradient check: loss is not finite");
      }
      // Central differences are meaningless across a ReLU or pooling kink.
      if (crosses_kink) {
        ++skipped;
        continue;
      }
      const double numeric = (lp - lm) / (plus - minus);
      const double a = analytic.gradients[tensor][idx];
      const double rel = std::abs(a - numeric) /
                         std::max({std::abs(a), std::abs(numeric), 1e-12});
      worst = std::max(worst, rel);
      ++checked;
    }
    report.layers.push_back((layer.spec.kind == LayerKind::kConv ? "conv" : "dense") +
                            std::to_string(li));
    report.max_relative_error.push_back(worst);
    report.checked.push_back(static_cast<int>(checked));
    report.skipped.push_back(skipped);
  }
  return report;
}

std::string NetworkToJson(const NetworkModel& model, bool with_weights) {
  nlohmann::json j;
  j["type"] = "network";
  j["spec"] = {{"input_size", model.spec.input_size},
               {"input_channels", model.spec.input_channels},
               {"backbone", FormatLayers(model.spec.backbone)},
               {"head", FormatLayers(model.spec.head)}};
  nlohmann::json history = nlohmann::json::array();
  for (const auto& e : model.history) history.push_back({e.train_loss, e.val_loss});
  j["history"] = history;
  j["best_epoch"] = model.best_epoch;
  std::vector<size_t> sizes;
  for (const auto& w : model.weights) sizes.push_back(w.size());
  j["tensor_sizes"] = sizes;
  if (with_weights) j["weights"] = model.weights;
  return j.dump(2) + "\n";
}

NetworkModel NetworkFromJson(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    NetworkModel model;
    const auto& spec = j.at("spec");
    model.spec.input_size = spec.at("input_size").get<int>();
    model.spec.input_channels = spec.at("input_channels").get<int>();
    model.spec.backbone = ParseLayers(spec.at("backbone").get<std::string>());
    model.spec.head = ParseLayers(spec.at("head").get<std::string>());
    for (const auto& e : j.at("history")) {
      model.history.push_back({e.at(0).get<double>(), e.at(1).get<double>()});
    }
    model.best_epoch = j.at("best_epoch").get<int>();
    if (j.contains("weights")) {
      model.weights = j.at("weights").get<std::vector<std::vector<double>>>();
      CheckWeights(BuildLayers(model.spec), model.weights);
    }
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("bad network JSON: ") + e.what());
  } catch (const InvalidArgument& e) {
    throw DataError(std::string("bad network JSON: ") + e.what());
  }
}

namespace {
constexpr char kNetworkMagic[8] = {'U', 'L', 'S', 'G', 'N', 'E', 'T', '1'};

void PutU64(std::string& out, uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
}  // namespace

std::string SerializeNetwork(const NetworkModel& model) {
  const std::string header = NetworkToJson(model, false);
  std::string out(kNetworkMagic, sizeof(kNetworkMagic));
  PutU64(out, header.size());
  out += header;
  for (const auto& tensor : model.weights) {
    for (double w : tensor) {
      const uint32_t bits = std::bit_cast<uint32_t>(static_cast<float>(w));
      for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
    }
  }
  return out;
}

NetworkModel DeserializeNetwork(std::string_view bytes) {
  if (bytes.size() < 16 || std::memcmp(bytes.data(), kNetworkMagic, 8) != 0) {
    throw DataError("not a network model file");
  }
  uint64_t header_size = 0;
  for (int i = 0; i < 8; ++i) {
    header_size |= static_cast<uint64_t>(static_cast<unsigned char>(bytes[8 + i])) << (8 * i);
  }
  if (header_size > bytes.size() - 16) throw DataError("truncated network model header");
  const std::string header(bytes.substr(16, header_size));
  NetworkModel model = NetworkFromJson(header);
  std::vector<size_t> sizes;
  try {
    sizes = nlohmann::json::parse(header).at("tensor_sizes").get<std::vector<size_t>>();
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("bad network model header: ") + e.what());
  }
  size_t pos = 16 + header_size;
  for (size_t size : sizes) {
    if ((bytes.size() - pos) / 4 < size) throw DataError("truncated network weights");
    std::vector<double> tensor(size);
    for (size_t i = 0; i < size; ++i, pos += 4) {
      uint32_t bits = 0;
      for (int b = 0; b < 4; ++b) {
        bits |= static_cast<uint32_t>(static_cast<unsigned char>(bytes[pos + b])) << (8 * b);
      }
      tensor[i] = static_cast<double>(std::bit_cast<float>(bits));
    }
    model.weights.push_back(std::move(tensor));
  }
  if (pos != bytes.size()) throw DataError("trailing bytes after network weights");
  try {
    CheckWeights(BuildLayers(model.spec), model.weights);
  } catch (const InvalidArgument& e) {
    throw DataError(std::string("bad network model: ") + e.what());
  }
  return model;
}

}  // namespace ulcerseg
