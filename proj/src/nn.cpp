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

#include "genhmm/nn.hpp"

#include <cmath>
#include <string>

#include "genhmm/errors.hpp"
#include "genhmm/numeric.hpp"

namespace genhmm::nn {
namespace {

std::vector<DenseLayer> make_layers(std::span<const int> widths) {
  if (widths.size() < 2) throw ConfigError("dense net needs at least input and output widths");
  std::vector<DenseLayer> layers;
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    if (widths[l] <= 0 || widths[l + 1] <= 0)
      throw ConfigError("dense net widths must be positive");
    DenseLayer layer;
    layer.weight = Matrix::Zero(widths[l + 1], widths[l]);
    layer.bias = Vector::Zero(widths[l + 1]);
    layer.activation = (l + 2 == widths.size()) ? Activation::kLinear : Activation::kTanh;
    layers.push_back(std::move(layer));
  }
  return layers;
}

void check_cache(const DenseNet& net, const ForwardCache& cache) {
  const auto& layers = net.layers();
  if (cache.inputs.size() != layers.size() || cache.outputs.size() != layers.size())
    throw ShapeError("stale forward cache: layer count changed");
  for (std::size_t l = 0; l < layers.size(); ++l) {
    if (cache.inputs[l].size() != layers[l].weight.cols() ||
        cache.outputs[l].size() != layers[l].weight.rows())
      throw ShapeError("stale forward cache: shape of layer " + std::to_string(l) + " changed");
  }
}

}  // namespace

DenseNet::DenseNet(std::vector<DenseLayer> layers) : layers_(std::move(layers)) { validate(); }

DenseNet DenseNet::glorot(std::span<const int> widths, std::mt19937_64& rng) {
  DenseNet net(make_layers(widths));
  for (auto& layer : net.layers_) {
    const double fan = static_cast<double>(layer.weight.rows() + layer.weight.cols());
    std::uniform_real_distribution<double> dist(-std::sqrt(6.0 / fan), std::sqrt(6.0 / fan));
    for (Eigen::Index i = 0; i < layer.weight.size(); ++i) layer.weight.data()[i] = dist(rng);
  }
  return net;
}

DenseNet DenseNet::zeros(std::span<const int> widths) { return DenseNet(make_layers(widths)); }

int DenseNet::input_dim() const {
  return layers_.empty() ? 0 : static_cast<int>(layers_.front().weight.cols());
}

int DenseNet::output_dim() const {
  return layers_.empty() ? 0 : static_cast<int>(layers_.back().weight.rows());
}

std::size_t DenseNet::parameter_count() const {
  std::size_t n = 0;
  for (const auto& layer : layers_) n += layer.weight.size() + layer.bias.size();
  return n;
}

std::vector<std::span<double>> DenseNet::parameter_blocks() {
  std::vector<std::span<double>> blocks;
  for (auto& layer : layers_) {
    blocks.emplace_back(layer.weight.data(), layer.weight.size());
    blocks.emplace_back(layer.bias.data(), layer.bias.size());
  }
  return blocks;
}

std::vector<std::span<const double>> DenseNet::parameter_blocks() const {
  std::vector<std::span<const double>> blocks;
  for (const auto& layer : layers_) {
    blocks.emplace_back(layer.weight.data(), layer.weight.size());
    blocks.emplace_back(layer.bias.data(), layer.bias.size());
  }
  return blocks;
}

void DenseNet::validate() const {
  if (layers_.empty()) throw ShapeError("dense net has no layers");
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const auto& layer = layers_[l];
    if (layer.bias.size() != layer.weight.rows())
      throw ShapeError("dense layer " + std::to_string(l) + ": bias length != output width");
    if (l > 0 && layer.weight.cols() != layers_[l - 1].weight.rows())
      throw ShapeError("dense layer " + std::to_string(l) + ": input width does not chain");
    if (!layer.weight.allFinite() || !layer.bias.allFinite())
      throw NumericalError("dense layer " + std::to_string(l) + ": non-finite parameter");
  }
}

GradientTape::GradientTape(const DenseNet& net) {
  for (const auto& layer : net.layers()) {
    weight.push_back(Matrix::Zero(layer.weight.rows(), layer.weight.cols()));
    bias.push_back(Vector::Zero(layer.bias.size()));
  }
}

bool GradientTape::matches(const DenseNet& net) const {
  const auto& layers = net.layers();
  if (weight.size() != layers.size() || bias.size() != layers.size()) return false;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    if (weight[l].rows() != layers[l].weight.rows() || weight[l].cols() != layers[l].weight.cols() ||
        bias[l].size() != layers[l].bias.size())
      return false;
  }
  return true;
}

void GradientTape::reset() {
  for (auto& w : weight) w.setZero();
  for (auto& b : bias) b.setZero();
  count = 0;
}

void GradientTape::merge(const GradientTape& other) {
  if (other.weight.size() != weight.size()) throw ShapeError("cannot merge tapes of different networks");
  for (std::size_t l = 0; l < weight.size(); ++l) {
    weight[l] += other.weight[l];
    bias[l] += other.bias[l];
  }
  count += other.count;
}

bool GradientTape::all_finite() const {
  for (std::size_t l = 0; l < weight.size(); ++l)
    if (!weight[l].allFinite() || !bias[l].allFinite()) return false;
  return true;
}

Vector forward(const DenseNet& net, const Eigen::Ref<const Vector>& input, ForwardCache* cache) {
  if (input.size() != net.input_dim())
    throw ShapeError("dense net expects input of length " + std::to_string(net.input_dim()) +
                     ", got " + std::to_string(input.size()));
  const auto& layers = net.layers();
  if (cache) {
    cache->inputs.resize(layers.size());
    cache->outputs.resize(layers.size());
  }
  Vector h = input;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto& layer = layers[l];
    Vector next = layer.weight * h + layer.bias;
    if (layer.activation == Activation::kTanh) next = tanh_array(next.array()).matrix();
    if (cache) {
      cache->inputs[l] = std::move(h);
      cache->outputs[l] = next;
    }
    h = std::move(next);
  }
  return h;
}

Backprop backpropagate(const DenseNet& net, const ForwardCache& cache,
                       const Eigen::Ref<const Vector>& output_grad) {
  check_cache(net, cache);
  if (output_grad.size() != net.output_dim()) throw ShapeError("output gradient has wrong length");
  const auto& layers = net.layers();
  Backprop out;
  out.deltas.resize(layers.size());
  Vector grad = output_grad;
  for (std::size_t l = layers.size(); l-- > 0;) {
    const auto& layer = layers[l];
    if (layer.activation == Activation::kTanh)
      grad = grad.array() * (1.0 - cache.outputs[l].array().square());
    Vector upstream = layer.weight.transpose() * grad;
    out.deltas[l] = std::move(grad);
    grad = std::move(upstream);
  }
  out.input_grad = std::move(grad);
  return out;
}

void accumulate(GradientTape& tape, const ForwardCache& cache, const Backprop& signals) {
  if (tape.weight.size() != signals.deltas.size()) throw ShapeError("tape does not match network");
  for (std::size_t l = 0; l < signals.deltas.size(); ++l) {
    tape.weight[l].noalias() += signals.deltas[l] * cache.inputs[l].transpose();
    tape.bias[l] += signals.deltas[l];
  }
  ++tape.count;
}

Vector backward(const DenseNet& net, const ForwardCache& cache,
                const Eigen::Ref<const Vector>& output_grad, GradientTape& tape) {
  if (!tape.matches(net)) throw ShapeError("gradient tape does not mirror the network");
  Backprop signals = backpropagate(net, cache, output_grad);
  accumulate(tape, cache, signals);
  return std::move(signals.input_grad);
}

Matrix forward_batch(const DenseNet& net, const Eigen::Ref<const Matrix>& input, BatchCache* cache) {
  if (input.rows() != net.input_dim())
    throw ShapeError("dense net expects inputs of length " + std::to_string(net.input_dim()) +
                     ", got " + std::to_string(input.rows()));
  const auto& layers = net.layers();
  if (cache) {
    cache->inputs.resize(layers.size());
    cache->outputs.resize(layers.size());
  }
  Matrix h = input;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto& layer = layers[l];
    Matrix next = layer.weight * h;
    next.colwise() += layer.bias;
    if (layer.activation == Activation::kTanh) next = tanh_array(next.array()).matrix();
    if (cache) {
      cache->inputs[l] = std::move(h);
      cache->outputs[l] = next;
    }
    h = std::move(next);
  }
  return h;
}

BatchBackprop backpropagate_batch(const DenseNet& net, const BatchCache& cache,
                                  const Eigen::Ref<const Matrix>& output_grad) {
  const auto& layers = net.layers();
  if (cache.inputs.size() != layers.size() || cache.outputs.size() != layers.size())
    throw ShapeError("batch cache does not match the network");
  if (output_grad.rows() != net.output_dim() || output_grad.cols() != cache.outputs.back().cols())
    throw ShapeError("output gradient has wrong shape");
  BatchBackprop out;
  out.deltas.resize(layers.size());
  Matrix grad = output_grad;
  for (std::size_t l = layers.size(); l-- > 0;) {
    const auto& layer = layers[l];
    if (layer.activation == Activation::kTanh)
      grad = grad.array() * (1.0 - cache.outputs[l].array().square());
    Matrix upstream = layer.weight.transpose() * grad;
    out.deltas[l] = std::move(grad);
    grad = std::move(upstream);
  }
  out.input_grad = std::move(grad);
  return out;
}

void accumulate_batch(GradientTape& tape, const BatchCache& cache, const BatchBackprop& signals,
                      std::size_t samples) {
  if (tape.weight.size() != signals.deltas.size()) throw ShapeError("tape does not match network");
  for (std::size_t l = 0; l < signals.deltas.size(); ++l) {
    tape.weight[l].noalias() += signals.deltas[l] * cache.inputs[l].transpose();
    tape.bias[l] += signals.deltas[l].rowwise().sum();
  }
  tape.count += samples;
}

AdamState::AdamState(const DenseNet& net, AdamConfig cfg) : config(cfg) {
  if (!(cfg.learning_rate > 0.0) || !(cfg.beta1 > 0.0) || !(cfg.beta2 > 0.0) || !(cfg.epsilon > 0.0) ||
      cfg.beta1 >= 1.0 || cfg.beta2 >= 1.0)
    throw ConfigError("invalid Adam hyperparameters");
  for (const auto& layer : net.layers()) {
    first_weight.push_back(Matrix::Zero(layer.weight.rows(), layer.weight.cols()));
    second_weight.push_back(Matrix::Zero(layer.weight.rows(), layer.weight.cols()));
    first_bias.push_back(Vector::Zero(layer.bias.size()));
    second_bias.push_back(Vector::Zero(layer.bias.size()));
  }
}

bool AdamState::matches(const DenseNet& net) const {
  const auto& layers = net.layers();
  if (first_weight.size() != layers.size()) return false;
  for (std::size_t l = 0; l < layers.size(); ++l)
    if (first_weight[l].rows() != layers[l].weight.rows() ||
        first_weight[l].cols() != layers[l].weight.cols() ||
        first_bias[l].size() != layers[l].bias.size())
      return false;
  return true;
}

StepResult adam_step(DenseNet& net, GradientTape& tape, AdamState& state, double scale) {
  if (tape.count == 0) throw std::logic_error("adam_step called with an empty gradient tape");
  if (!tape.matches(net) || !state.matches(net)) throw ShapeError("optimizer state does not mirror the network");
  if (!tape.all_finite() || !std::isfinite(scale)) {
    tape.reset();
    return StepResult::kRejectedNonFinite;
  }
  const auto& c = state.config;
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double step_size = c.learning_rate * std::sqrt(1.0 - std::pow(c.beta2, t)) /
                           (1.0 - std::pow(c.beta1, t));
  // Bias correction folded into the step size; epsilon scaled to match the
  // textbook form eps / sqrt(1 - beta2^t) applied to the corrected moment.
  const double eps = c.epsilon * std::sqrt(1.0 - std::pow(c.beta2, t));
  auto update = [&](auto& param, auto& m, auto& v, const auto& g_raw) {
    auto g = (g_raw * scale).eval();
    m = c.beta1 * m + (1.0 - c.beta1) * g;
    v = (c.beta2 * v.array() + (1.0 - c.beta2) * g.array().square()).matrix();
    param.array() += step_size * m.array() / (v.array().sqrt() + eps);
  };
  auto& layers = net.layers();
  for (std::size_t l = 0; l < layers.size(); ++l) {
    update(layers[l].weight, state.first_weight[l], state.second_weight[l], tape.weight[l]);
    update(layers[l].bias, state.first_bias[l], state.second_bias[l], tape.bias[l]);
  }
  tape.reset();
  return StepResult::kApplied;
}

}  // namespace genhmm::nn
