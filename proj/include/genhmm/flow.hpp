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

#include <random>
#include <vector>

#include "genhmm/nn.hpp"
#include "genhmm/types.hpp"

// Invertible generators built from affine coupling layers.
//
// Direction convention: the generator g maps latent z to data x; its
// inverse f maps data to latent and is the direction used for density
// evaluation. Each coupling layer of f keeps part a and transforms part b as
//
//   b' = exp(s(a)) * b + t(a),    s(a) = c * tanh(scale_net(a) / c)
//
// so log|det| of the layer is sum(s). The generator applies the layers in
// reverse order with b = (b' - t(a)) * exp(-s(a)).
namespace genhmm::flow {

inline constexpr double kScaleClamp = 5.0;

struct FlowConfig {
  int dim = 0;
  int blocks = 4;
  int hidden_width = 24;
  int dense_layers = 3;  // including the output layer
};

struct CouplingLayer {
  // Coordinates [0, split) form one half and [split, dim) the other.
  int split = 0;
  // false: part a = [0, split); true: part a = [split, dim).
  bool swapped = false;
  nn::DenseNet scale_net;  // |a| -> |b|, raw log-scale before clamping
  nn::DenseNet shift_net;  // |a| -> |b|

  int a_offset() const { return swapped ? split : 0; }
  int b_offset() const { return swapped ? 0 : split; }
  int a_size(int dim) const { return swapped ? dim - split : split; }
  int b_size(int dim) const { return swapped ? split : dim - split; }
};

class FlowGenerator {
 public:
  FlowGenerator() = default;
  FlowGenerator(int dim, std::vector<CouplingLayer> layers);

  // Glorot-initialized coupling nets.
  static FlowGenerator random(const FlowConfig& config, std::mt19937_64& rng);
  // All coupling nets zero: f and g are the identity.
  static FlowGenerator identity(const FlowConfig& config);

  int dim() const { return dim_; }
  int block_count() const { return static_cast<int>(layers_.size()) / 2; }
  const std::vector<CouplingLayer>& layers() const { return layers_; }
  std::vector<CouplingLayer>& layers() { return layers_; }
  std::size_t parameter_count() const;

  void validate() const;

 private:
  int dim_ = 0;
  std::vector<CouplingLayer> layers_;
};

// A pair of opposite-orientation coupling layers. Exposed so callers can
// assemble generators block by block (e.g. ground-truth models).
std::vector<CouplingLayer> make_block(const FlowConfig& config, std::mt19937_64* rng);

// Per-layer record kept by flow_inverse for the backward pass.
struct LayerCache {
  Vector input;       // h entering the layer (data side)
  Vector clamp_tanh;  // tanh(raw / c)
  Vector scale;       // exp(s)
  nn::ForwardCache scale_cache;
  nn::ForwardCache shift_cache;
};

struct FlowCache {
  std::vector<LayerCache> layers;
  Vector z;
  double log_det = 0.0;
};

struct InverseResult {
  Vector z;
  double log_det = 0.0;
};

// z = f(x) and log|det df/dx|.
InverseResult flow_inverse(const FlowGenerator& gen, const Eigen::Ref<const Vector>& x,
                           FlowCache* cache = nullptr);

// x = g(z).
Vector flow_forward(const FlowGenerator& gen, const Eigen::Ref<const Vector>& z);

// log N(f(x); 0, I) + log|det df/dx|.
double flow_loglik(const FlowGenerator& gen, const Eigen::Ref<const Vector>& x,
                   FlowCache* cache = nullptr);

// Gradient buffers for every coupling net of one generator.
struct FlowTapes {
  FlowTapes() = default;
  explicit FlowTapes(const FlowGenerator& gen);
  void reset();
  void merge(const FlowTapes& other);
  std::size_t count() const { return scale.empty() ? 0 : scale.front().count; }

  std::vector<nn::GradientTape> scale;
  std::vector<nn::GradientTape> shift;
};

// Accumulates weight * d(loglik)/d(theta) into `tapes`. Returns false (and
// leaves the tapes untouched) when any gradient signal is non-finite.
bool flow_loglik_backward(const FlowGenerator& gen, const FlowCache& cache, double weight,
                          FlowTapes& tapes);

// Column-batched likelihood: column j of `x` is one frame. Non-finite
// results are returned rather than thrown.
struct BatchLayerCache {
  Matrix input;
  Matrix clamp_tanh;
  Matrix scale;
  nn::BatchCache scale_cache;
  nn::BatchCache shift_cache;
};

struct BatchFlowCache {
  std::vector<BatchLayerCache> layers;
  Matrix z;
  Vector log_det;
};

Vector flow_loglik_batch(const FlowGenerator& gen, const Eigen::Ref<const Matrix>& x,
                         BatchFlowCache* cache = nullptr);

// Adds sum_j weights(j) * d loglik_j / d theta to the tapes. Columns with a
// non-finite value or gradient are left out; returns how many.
long flow_loglik_backward_batch(const FlowGenerator& gen, const BatchFlowCache& cache,
                                const Eigen::Ref<const Vector>& weights, FlowTapes& tapes);

// Adam state for every coupling net of one generator.
struct FlowOptimizer {
  FlowOptimizer() = default;
  FlowOptimizer(const FlowGenerator& gen, nn::AdamConfig config);

  std::vector<nn::AdamState> scale;
  std::vector<nn::AdamState> shift;
};

// Applies one Adam ascent step per coupling net. Returns false if any net
// rejected its update for non-finite gradients.
bool flow_adam_step(FlowGenerator& gen, FlowTapes& tapes, FlowOptimizer& optimizer,
                    double scale);

}  // namespace genhmm::flow
