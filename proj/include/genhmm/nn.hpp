// Copyright 2026 The GenHMM Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstddef>
#include <random>
#include <span>
#include <vector>

#include "genhmm/types.hpp"

// Small dense feed-forward networks with hand-written reverse mode and an
// Adam updater. These back the scale and shift maps of the coupling layers.
namespace genhmm::nn {

enum class Activation { kLinear, kTanh };

struct DenseLayer {
  Matrix weight;  // out x in
  Vector bias;    // out
  Activation activation = Activation::kLinear;
};

class DenseNet {
 public:
  DenseNet() = default;
  explicit DenseNet(std::vector<DenseLayer> layers);

  // Builds a network with `widths` = {in, hidden..., out}: tanh on hidden
  // layers, linear output. Weights are Glorot-uniform, biases zero.
  static DenseNet glorot(std::span<const int> widths, std::mt19937_64& rng);
  // Same topology with every parameter zero.
  static DenseNet zeros(std::span<const int> widths);

  int input_dim() const;
  int output_dim() const;
  std::size_t parameter_count() const;

  const std::vector<DenseLayer>& layers() const { return layers_; }
  std::vector<DenseLayer>& layers() { return layers_; }

  // Contiguous parameter blocks: weight then bias of each layer.
  std::vector<std::span<double>> parameter_blocks();
  std::vector<std::span<const double>> parameter_blocks() const;

  void validate() const;

 private:
  std::vector<DenseLayer> layers_;
};

// Per-layer inputs and outputs recorded by `forward`.
struct ForwardCache {
  std::vector<Vector> inputs;
  std::vector<Vector> outputs;
};

class GradientTape {
 public:
  GradientTape() = default;
  explicit GradientTape(const DenseNet& net);

  bool matches(const DenseNet& net) const;
  void reset();
  void merge(const GradientTape& other);
  bool all_finite() const;

  std::vector<Matrix> weight;
  std::vector<Vector> bias;
  std::size_t count = 0;
};

// Error signals per layer (w.r.t. pre-activations) plus the input gradient.
// Produced without touching any tape so callers can validate before
// accumulating.
struct Backprop {
  std::vector<Vector> deltas;
  Vector input_grad;
};

Vector forward(const DenseNet& net, const Eigen::Ref<const Vector>& input,
               ForwardCache* cache = nullptr);

Backprop backpropagate(const DenseNet& net, const ForwardCache& cache,
                       const Eigen::Ref<const Vector>& output_grad);

// tape += outer(delta, input) for every layer.
void accumulate(GradientTape& tape, const ForwardCache& cache,
                const Backprop& signals);

// backpropagate + accumulate. Returns the input gradient.
Vector backward(const DenseNet& net, const ForwardCache& cache,
                const Eigen::Ref<const Vector>& output_grad, GradientTape& tape);

// Column-batched passes: column j of every matrix belongs to sample j.
struct BatchCache {
  std::vector<Matrix> inputs;
  std::vector<Matrix> outputs;
};

struct BatchBackprop {
  std::vector<Matrix> deltas;
  Matrix input_grad;
};

Matrix forward_batch(const DenseNet& net, const Eigen::Ref<const Matrix>& input,
                     BatchCache* cache = nullptr);

BatchBackprop backpropagate_batch(const DenseNet& net, const BatchCache& cache,
                                  const Eigen::Ref<const Matrix>& output_grad);

// Adds every column's contribution; `samples` is added to the tape count.
void accumulate_batch(GradientTape& tape, const BatchCache& cache, const BatchBackprop& signals,
                      std::size_t samples);

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

class AdamState {
 public:
  AdamState() = default;
  AdamState(const DenseNet& net, AdamConfig config);

  bool matches(const DenseNet& net) const;

  AdamConfig config;
  std::vector<Matrix> first_weight, second_weight;
  std::vector<Vector> first_bias, second_bias;
  long step = 0;
};

enum class StepResult { kApplied, kRejectedNonFinite };

// One Adam step in the ascent direction of the accumulated gradient, which
// is multiplied by `scale` first (e.g. 1/frames to average a batch). The
// tape is reset on success and on rejection.
StepResult adam_step(DenseNet& net, GradientTape& tape, AdamState& state,
                     double scale = 1.0);

}  // namespace genhmm::nn
