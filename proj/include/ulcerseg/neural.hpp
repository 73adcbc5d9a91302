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

// Small convolutional networks: layer stack description, He-uniform
// initialization, SGD-momentum training with early stopping, inference,
// finite-difference gradient checking and model persistence.

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ulcerseg/imagecore.hpp"

namespace ulcerseg {

enum class LayerKind { kConv, kRelu, kMaxPool, kDense, kDropout };

struct LayerSpec {
  LayerKind kind = LayerKind::kRelu;
  // Output channels (conv) or units (dense).
  int units = 0;
  // Drop probability (dropout).
  double rate = 0.0;

  static LayerSpec Conv(int channels) { return {LayerKind::kConv, channels, 0.0}; }
  static LayerSpec Relu() { return {LayerKind::kRelu, 0, 0.0}; }
  static LayerSpec MaxPool() { return {LayerKind::kMaxPool, 0, 0.0}; }
  static LayerSpec Dense(int units) { return {LayerKind::kDense, units, 0.0}; }
  static LayerSpec Dropout(double rate) { return {LayerKind::kDropout, 0, rate}; }

  friend bool operator==(const LayerSpec&, const LayerSpec&) = default;
};

// "conv<N>", "relu", "pool", "dense<N>", "dropout<p>".
std::string FormatLayer(const LayerSpec& layer);
LayerSpec ParseLayer(std::string_view text);
// Comma-separated list of layers.
std::vector<LayerSpec> ParseLayers(std::string_view text);
std::string FormatLayers(const std::vector<LayerSpec>& layers);

// Conv layers are 3x3, stride 1, zero "same" padding; pooling is 2x2 with
// stride 2. Inputs are input_channels x input_size x input_size tensors
// (input_size 1 for flat feature vectors). The final layer must be Dense;
// its outputs go through softmax.
struct NetworkSpec {
  int input_size = 32;
  int input_channels = 3;
  std::vector<LayerSpec> backbone;
  std::vector<LayerSpec> head;

  std::vector<LayerSpec> layers() const;
  int outputs() const;

  friend bool operator==(const NetworkSpec&, const NetworkSpec&) = default;
};

// Conv(8)-ReLU-MaxPool-Conv(16)-ReLU-MaxPool.
std::vector<LayerSpec> DefaultBackbone();
// Dense(w)+ReLU, Dropout(0.5), Dense(w)+ReLU, Dropout(0.5), Dense(4).
std::vector<LayerSpec> QtduHead(int width = 512);
NetworkSpec QtduSpec(int input_size = 32,
                     std::vector<LayerSpec> backbone = DefaultBackbone(),
                     int head_width = 512);
// True if `head` has the QTDU layer sequence (any hidden width) ending in
// four outputs.
bool IsQtduHead(const std::vector<LayerSpec>& head);

// Throws InvalidArgument when a layer is malformed or the shapes collapse.
void ValidateNetworkSpec(const NetworkSpec& spec);
int InputDim(const NetworkSpec& spec);

struct TrainConfig {
  double learning_rate = 0.001;
  double momentum = 0.88;
  int batch_size = 24;
  int max_epochs = 200;
  // Epochs without a validation-loss improvement of at least min_delta
  // before training stops.
  int patience = 50;
  double min_delta = 1e-6;
  uint64_t seed = 1;
};

// Throws InvalidArgument when a field is out of range.
void ValidateTrainConfig(const TrainConfig& config);

struct EpochStats {
  double train_loss = 0.0;
  double val_loss = 0.0;
};

struct NetworkModel {
  NetworkSpec spec;
  // Parameter tensors in layer order; each conv or dense layer contributes
  // its weight matrix (row-major, out x in) followed by its bias.
  std::vector<std::vector<double>> weights;
  std::vector<EpochStats> history;
  // 0-based epoch whose weights were kept, -1 for an untrained model.
  int best_epoch = -1;
};

// Random access to training samples so augmented sets can be generated on
// demand instead of held in memory.
class SampleSource {
 public:
  virtual ~SampleSource() = default;
  virtual size_t size() const = 0;
  // Writes the network input for sample `index` and returns its target
  // output index.
  virtual int Get(size_t index, std::span<double> input) const = 0;
};

class VectorSource : public SampleSource {
 public:
  VectorSource(std::vector<std::vector<double>> inputs, std::vector<int> targets);

  size_t size() const override { return inputs_.size(); }
  int Get(size_t index, std::span<double> input) const override;

 private:
  std::vector<std::vector<double>> inputs_;
  std::vector<int> targets_;
};

// Channel-major network input of a patch, scaled to [-0.5, 0.5].
std::vector<double> PatchToInput(const Patch& patch);
void PatchToInput(const Patch& patch, std::span<double> out);

// He-uniform weights (limit sqrt(6 / fan_in)), zero biases.
NetworkModel InitializeNetwork(const NetworkSpec& spec, uint64_t seed);

// Mini-batch SGD with momentum on softmax cross-entropy. Returns the weights
// of the epoch with the lowest validation loss (training loss when `val` is
// empty). Throws TrainingError on empty data or a non-finite loss,
// InvalidArgument on bad configuration.
NetworkModel Train(const NetworkSpec& spec, const TrainConfig& config,
                   const SampleSource& train, const SampleSource& val);

// Continues from `initial` instead of a fresh initialization.
NetworkModel Train(const NetworkModel& initial, const TrainConfig& config,
                   const SampleSource& train, const SampleSource& val);

// v <- momentum * v - lr * grad; w <- w + v.
void SgdStep(std::span<double> weights, std::span<const double> grads,
             std::span<double> velocity, double learning_rate, double momentum);

// Softmax scores of one input (dropout off). Throws InvalidArgument on a
// size mismatch.
std::vector<double> PredictScores(const NetworkModel& model,
                                  std::span<const double> input);
// Batched inference; rows of `inputs` are concatenated network inputs.
std::vector<std::vector<double>> PredictScoresBatch(const NetworkModel& model,
                                                    std::span<const double> inputs,
                                                    size_t count);
// Four-output networks only; label ties go to the lowest class code.
Prediction Predict(const NetworkModel& model, const Patch& patch);

enum class LossKind {
  kCrossEntropy,
  // 0.5 * |logits - one_hot|^2, used for gradient diagnostics.
  kSquaredError,
};

// Per dropout layer, a units x batch keep-mask (column-major by sample)
// holding 0 or 1 / (1 - rate).
using DropoutMasks = std::vector<std::vector<double>>;

DropoutMasks DrawDropoutMasks(const NetworkSpec& spec, size_t batch, uint64_t seed);

struct LossAndGradients {
  double loss = 0.0;
  std::vector<std::vector<double>> gradients;
};

// Mean loss over the batch and its gradient with respect to every
// parameter tensor. Dropout uses `masks` when given and is off otherwise.
LossAndGradients ComputeGradients(const NetworkModel& model,
                                  std::span<const double> inputs,
                                  std::span<const int> targets, LossKind loss,
                                  const DropoutMasks* masks = nullptr);

// Gradient of the mean cross-entropy with respect to the logits of one
// sample: softmax(logits) - one_hot(target).
std::vector<double> SoftmaxCrossEntropyGradient(std::span<const double> logits,
                                                int target);

struct GradientCheckReport {
  // One entry per conv or dense layer, e.g. "conv0", "dense5".
  std::vector<std::string> layers;
  std::vector<double> max_relative_error;
  // Parameters compared, and parameters passed over because a +-epsilon
  // probe changed the activation pattern.
  std::vector<int> checked;
  std::vector<int> skipped;
  double worst() const;
};

// Compares analytic gradients with central differences on up to
// `samples_per_layer` randomly chosen parameters of each layer, using one
// fixed set of dropout masks. A parameter whose probes flip a ReLU sign or
// a pooling winner is replaced by the next random pick. Throws InvalidArgument for epsilon outside
// [1e-6, 1e-3] and NumericError for a non-finite loss.
GradientCheckReport GradientCheck(const NetworkModel& model,
                                  std::span<const double> inputs,
                                  std::span<const int> targets, double epsilon,
                                  uint64_t seed,
                                  LossKind loss = LossKind::kCrossEntropy,
                                  int samples_per_layer = 200);

// JSON with spec and history; weights included as arrays when requested.
std::string NetworkToJson(const NetworkModel& model, bool with_weights);
NetworkModel NetworkFromJson(const std::string& text);

// Binary model file: 8-byte magic, little-endian u64 header length, JSON
// header, then every weight as a little-endian float32. Loaded weights are
// therefore rounded to float precision.
std::string SerializeNetwork(const NetworkModel& model);
// Throws DataError on malformed input.
NetworkModel DeserializeNetwork(std::string_view bytes);

}  // namespace ulcerseg
