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

#include "genhmm/flow.hpp"

#include <array>
#include <cmath>
#include <string>
#include <tuple>

#include "genhmm/errors.hpp"
#include "genhmm/numeric.hpp"

namespace genhmm::flow {
namespace {

std::vector<int> net_widths(const FlowConfig& config, int in, int out) {
  std::vector<int> widths{in};
  for (int i = 0; i + 1 < config.dense_layers; ++i) widths.push_back(config.hidden_width);
  widths.push_back(out);
  return widths;
}

void check_config(const FlowConfig& config) {
  if (config.dim < 2) throw ConfigError("flow generators need frame dimension >= 2");
  if (config.blocks < 1) throw ConfigError("flow generators need at least one block");
  if (config.hidden_width < 1) throw ConfigError("coupling hidden width must be positive");
  if (config.dense_layers < 1) throw ConfigError("coupling nets need at least one layer");
}

void check_input(const FlowGenerator& gen, const Eigen::Ref<const Vector>& v) {
  if (v.size() != gen.dim())
    throw ShapeError("flow expects a vector of length " + std::to_string(gen.dim()) + ", got " +
                     std::to_string(v.size()));
}

}  // namespace

std::vector<CouplingLayer> make_block(const FlowConfig& config, std::mt19937_64* rng) {
  check_config(config);
  const int split = (config.dim + 1) / 2;
  std::vector<CouplingLayer> block;
  for (bool swapped : {false, true}) {
    CouplingLayer layer;
    layer.split = split;
    layer.swapped = swapped;
    const auto widths = net_widths(config, layer.a_size(config.dim), layer.b_size(config.dim));
    if (rng) {
      layer.scale_net = nn::DenseNet::glorot(widths, *rng);
      layer.shift_net = nn::DenseNet::glorot(widths, *rng);
    } else {
      layer.scale_net = nn::DenseNet::zeros(widths);
      layer.shift_net = nn::DenseNet::zeros(widths);
    }
    block.push_back(std::move(layer));
  }
  return block;
}

FlowGenerator::FlowGenerator(int dim, std::vector<CouplingLayer> layers)
    : dim_(dim), layers_(std::move(layers)) {
  validate();
}

FlowGenerator FlowGenerator::random(const FlowConfig& config, std::mt19937_64& rng) {
  std::vector<CouplingLayer> layers;
  for (int b = 0; b < config.blocks; ++b) {
    auto block = make_block(config, &rng);
    for (auto& layer : block) layers.push_back(std::move(layer));
  }
  return FlowGenerator(config.dim, std::move(layers));
}

FlowGenerator FlowGenerator::identity(const FlowConfig& config) {
  std::vector<CouplingLayer> layers;
  for (int b = 0; b < config.blocks; ++b) {
    auto block = make_block(config, nullptr);
    for (auto& layer : block) layers.push_back(std::move(layer));
  }
  return FlowGenerator(config.dim, std::move(layers));
}

std::size_t FlowGenerator::parameter_count() const {
  std::size_t n = 0;
  for (const auto& layer : layers_) n += layer.scale_net.parameter_count() + layer.shift_net.parameter_count();
  return n;
}

void FlowGenerator::validate() const {
  if (dim_ < 2) throw ShapeError("flow generator dimension must be >= 2");
  if (layers_.empty()) throw ShapeError("flow generator has no coupling layers");
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const auto& layer = layers_[l];
    const std::string where = "coupling layer " + std::to_string(l);
    if (layer.split <= 0 || layer.split >= dim_) throw ShapeError(where + ": split outside (0, dim)");
    if (l > 0 && layer.swapped == layers_[l - 1].swapped)
      throw ShapeError(where + ": orientation must alternate");
    layer.scale_net.validate();
    layer.shift_net.validate();
    const int a = layer.a_size(dim_), b = layer.b_size(dim_);
    for (const auto* net : {&layer.scale_net, &layer.shift_net})
      if (net->input_dim() != a || net->output_dim() != b)
        throw ShapeError(where + ": coupling net shape does not match the split");
  }
}

InverseResult flow_inverse(const FlowGenerator& gen, const Eigen::Ref<const Vector>& x,
                           FlowCache* cache) {
  check_input(gen, x);
  const int dim = gen.dim();
  const auto& layers = gen.layers();
  if (cache) cache->layers.resize(layers.size());
  Vector h = x;
  double log_det = 0.0;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto& layer = layers[l];
    const int ao = layer.a_offset(), as = layer.a_size(dim);
    const int bo = layer.b_offset(), bs = layer.b_size(dim);
    LayerCache* lc = cache ? &cache->layers[l] : nullptr;
    if (lc) lc->input = h;
    const Vector a = h.segment(ao, as);
    Vector raw = nn::forward(layer.scale_net, a, lc ? &lc->scale_cache : nullptr);
    Vector shift = nn::forward(layer.shift_net, a, lc ? &lc->shift_cache : nullptr);
    Vector th = tanh_array(raw.array() / kScaleClamp).matrix();
    Vector s = kScaleClamp * th;
    Vector scale = s.array().exp();
    h.segment(bo, bs) = scale.cwiseProduct(h.segment(bo, bs)) + shift;
    log_det += s.sum();
    if (!all_finite(h) || !std::isfinite(log_det))
      throw NumericalError("flow coupling layer " + std::to_string(l) + ": non-finite intermediate");
    if (lc) {
      lc->clamp_tanh = std::move(th);
      lc->scale = std::move(scale);
    }
  }
  if (cache) {
    cache->z = h;
    cache->log_det = log_det;
  }
  return {std::move(h), log_det};
}

Vector flow_forward(const FlowGenerator& gen, const Eigen::Ref<const Vector>& z) {
  check_input(gen, z);
  const int dim = gen.dim();
  const auto& layers = gen.layers();
  Vector h = z;
  for (std::size_t l = layers.size(); l-- > 0;) {
    const auto& layer = layers[l];
    const int ao = layer.a_offset(), as = layer.a_size(dim);
    const int bo = layer.b_offset(), bs = layer.b_size(dim);
    const Vector a = h.segment(ao, as);
    const Vector raw = nn::forward(layer.scale_net, a);
    const Vector shift = nn::forward(layer.shift_net, a);
    const Vector s = (kScaleClamp * tanh_array(raw.array() / kScaleClamp)).matrix();
    h.segment(bo, bs) = (h.segment(bo, bs) - shift).cwiseProduct((-s).array().exp().matrix());
    if (!all_finite(h))
      throw NumericalError("flow coupling layer " + std::to_string(l) + ": non-finite intermediate");
  }
  return h;
}

double flow_loglik(const FlowGenerator& gen, const Eigen::Ref<const Vector>& x, FlowCache* cache) {
  InverseResult r = flow_inverse(gen, x, cache);
  return standard_normal_logpdf(r.z) + r.log_det;
}

FlowTapes::FlowTapes(const FlowGenerator& gen) {
  for (const auto& layer : gen.layers()) {
    scale.emplace_back(layer.scale_net);
    shift.emplace_back(layer.shift_net);
  }
}

void FlowTapes::reset() {
  for (auto& t : scale) t.reset();
  for (auto& t : shift) t.reset();
}

void FlowTapes::merge(const FlowTapes& other) {
  if (other.scale.size() != scale.size()) throw ShapeError("cannot merge tapes of different generators");
  for (std::size_t l = 0; l < scale.size(); ++l) {
    scale[l].merge(other.scale[l]);
    shift[l].merge(other.shift[l]);
  }
}

bool flow_loglik_backward(const FlowGenerator& gen, const FlowCache& cache, double weight,
                          FlowTapes& tapes) {
  if (weight == 0.0) return true;
  const auto& layers = gen.layers();
  if (cache.layers.size() != layers.size() || tapes.scale.size() != layers.size())
    throw ShapeError("stale flow cache or tapes");
  const int dim = gen.dim();

  struct Signals {
    nn::Backprop scale, shift;
  };
  std::vector<Signals> signals(layers.size());

  // d(weight * loglik)/dz for the Gaussian term.
  Vector g = -weight * cache.z;
  for (std::size_t l = layers.size(); l-- > 0;) {
    const auto& layer = layers[l];
    const auto& lc = cache.layers[l];
    const int ao = layer.a_offset(), as = layer.a_size(dim);
    const int bo = layer.b_offset(), bs = layer.b_size(dim);
    const Vector g_out_b = g.segment(bo, bs);
    const Vector in_b = lc.input.segment(bo, bs);
    // d/ds: through b' = exp(s) * b, plus the log-det term sum(s).
    const Vector d_s = (g_out_b.array() * lc.scale.array() * in_b.array() + weight).matrix();
    const Vector d_raw = (d_s.array() * (1.0 - lc.clamp_tanh.array().square())).matrix();
    signals[l].scale = nn::backpropagate(layer.scale_net, lc.scale_cache, d_raw);
    signals[l].shift = nn::backpropagate(layer.shift_net, lc.shift_cache, g_out_b);
    Vector g_in(dim);
    g_in.segment(bo, bs) = g_out_b.cwiseProduct(lc.scale);
    g_in.segment(ao, as) =
        g.segment(ao, as) + signals[l].scale.input_grad + signals[l].shift.input_grad;
    if (!all_finite(g_in)) return false;
    for (const auto* bp : {&signals[l].scale, &signals[l].shift})
      for (const auto& d : bp->deltas)
        if (!all_finite(d)) return false;
    g = std::move(g_in);
  }
  for (std::size_t l = 0; l < layers.size(); ++l) {
    nn::accumulate(tapes.scale[l], cache.layers[l].scale_cache, signals[l].scale);
    nn::accumulate(tapes.shift[l], cache.layers[l].shift_cache, signals[l].shift);
  }
  return true;
}

Vector flow_loglik_batch(const FlowGenerator& gen, const Eigen::Ref<const Matrix>& x, BatchFlowCache* cache) {
  const int dim = gen.dim();
  if (x.rows() != dim)
    throw ShapeError("flow expects frames of length " + std::to_string(dim) + ", got " + std::to_string(x.rows()));
  const auto& layers = gen.layers();
  if (cache) cache->layers.resize(layers.size());
  Matrix h = x;
  Vector log_det = Vector::Zero(x.cols());
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto& layer = layers[l];
    const int ao = layer.a_offset(), as = layer.a_size(dim);
    const int bo = layer.b_offset(), bs = layer.b_size(dim);
    BatchLayerCache* lc = cache ? &cache->layers[l] : nullptr;
    if (lc) lc->input = h;
    const Matrix a = h.middleRows(ao, as);
    const Matrix raw = nn::forward_batch(layer.scale_net, a, lc ? &lc->scale_cache : nullptr);
    const Matrix shift = nn::forward_batch(layer.shift_net, a, lc ? &lc->shift_cache : nullptr);
    Matrix th = tanh_array(raw.array() / kScaleClamp).matrix();
    Matrix scale = (kScaleClamp * th.array()).exp();
    h.middleRows(bo, bs) = (scale.array() * h.middleRows(bo, bs).array() + shift.array()).matrix();
    log_det += kScaleClamp * th.colwise().sum().transpose();
    if (lc) {
      lc->clamp_tanh = std::move(th);
      lc->scale = std::move(scale);
    }
  }
  Vector ll = (-0.5 * static_cast<double>(dim) * kLog2Pi) - 0.5 * h.colwise().squaredNorm().transpose().array();
  ll += log_det;
  if (cache) {
    cache->z = std::move(h);
    cache->log_det = std::move(log_det);
  }
  return ll;
}

namespace {

void zero_columns(Matrix& m, const std::vector<Eigen::Index>& cols) {
  for (Eigen::Index c : cols) m.col(c).setZero();
}

bool column_finite(const Matrix& m, Eigen::Index c) { return m.col(c).allFinite(); }

}  // namespace

long flow_loglik_backward_batch(const FlowGenerator& gen, const BatchFlowCache& cache,
                                const Eigen::Ref<const Vector>& weights, FlowTapes& tapes) {
  const auto& layers = gen.layers();
  const Eigen::Index B = cache.z.cols();
  if (cache.layers.size() != layers.size() || tapes.scale.size() != layers.size() || weights.size() != B)
    throw ShapeError("stale batch flow cache, tapes or weights");
  const int dim = gen.dim();

  std::vector<char> bad(static_cast<std::size_t>(B), 0);
  for (Eigen::Index j = 0; j < B; ++j)
    if (!std::isfinite(weights(j)) || !column_finite(cache.z, j) || !std::isfinite(cache.log_det(j)))
      bad[static_cast<std::size_t>(j)] = 1;
  Vector w = weights;
  for (Eigen::Index j = 0; j < B; ++j)
    if (bad[static_cast<std::size_t>(j)]) w(j) = 0.0;

  struct Signals {
    nn::BatchBackprop scale, shift;
  };
  std::vector<Signals> signals(layers.size());
  Matrix g = -(cache.z * w.asDiagonal());
  for (Eigen::Index j = 0; j < B; ++j)
    if (bad[static_cast<std::size_t>(j)]) g.col(j).setZero();
  for (std::size_t l = layers.size(); l-- > 0;) {
    const auto& layer = layers[l];
    const auto& lc = cache.layers[l];
    const int ao = layer.a_offset(), as = layer.a_size(dim);
    const int bo = layer.b_offset(), bs = layer.b_size(dim);
    const Matrix g_out_b = g.middleRows(bo, bs);
    Matrix d_s = g_out_b.array() * lc.scale.array() * lc.input.middleRows(bo, bs).array();
    d_s.rowwise() += w.transpose();
    const Matrix d_raw = d_s.array() * (1.0 - lc.clamp_tanh.array().square());
    signals[l].scale = nn::backpropagate_batch(layer.scale_net, lc.scale_cache, d_raw);
    signals[l].shift = nn::backpropagate_batch(layer.shift_net, lc.shift_cache, g_out_b);
    Matrix g_in(dim, B);
    g_in.middleRows(bo, bs) = g_out_b.cwiseProduct(lc.scale);
    g_in.middleRows(ao, as) = g.middleRows(ao, as) + signals[l].scale.input_grad + signals[l].shift.input_grad;
    g = std::move(g_in);
    for (Eigen::Index j = 0; j < B; ++j) {
      if (bad[static_cast<std::size_t>(j)]) continue;
      bool ok = column_finite(g, j);
      for (const auto* bp : {&signals[l].scale, &signals[l].shift})
        for (const auto& d : bp->deltas) ok = ok && column_finite(d, j);
      if (!ok) bad[static_cast<std::size_t>(j)] = 1;
    }
  }

  std::vector<Eigen::Index> skip;
  std::size_t used = 0;
  for (Eigen::Index j = 0; j < B; ++j) {
    if (bad[static_cast<std::size_t>(j)]) skip.push_back(j);
    else if (w(j) != 0.0) ++used;
  }
  long skipped = 0;
  for (Eigen::Index j : skip)
    if (weights(j) != 0.0) ++skipped;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto& lc = cache.layers[l];
    for (auto [bp, fc, tape] : {std::tuple{&signals[l].scale, &lc.scale_cache, &tapes.scale[l]},
                                std::tuple{&signals[l].shift, &lc.shift_cache, &tapes.shift[l]}}) {
      if (skip.empty()) {
        nn::accumulate_batch(*tape, *fc, *bp, used);
        continue;
      }
      nn::BatchCache clean = *fc;
      for (auto& m : clean.inputs) zero_columns(m, skip);
      for (auto& d : bp->deltas) zero_columns(d, skip);
      nn::accumulate_batch(*tape, clean, *bp, used);
    }
  }
  return skipped;
}

FlowOptimizer::FlowOptimizer(const FlowGenerator& gen, nn::AdamConfig config) {
  for (const auto& layer : gen.layers()) {
    scale.emplace_back(layer.scale_net, config);
    shift.emplace_back(layer.shift_net, config);
  }
}

bool flow_adam_step(FlowGenerator& gen, FlowTapes& tapes, FlowOptimizer& optimizer, double scale) {
  auto& layers = gen.layers();
  if (tapes.scale.size() != layers.size() || optimizer.scale.size() != layers.size())
    throw ShapeError("optimizer or tapes do not match the generator");
  for (std::size_t l = 0; l < layers.size(); ++l) {
    if (!tapes.scale[l].all_finite() || !tapes.shift[l].all_finite()) {
      tapes.reset();
      return false;
    }
  }
  for (std::size_t l = 0; l < layers.size(); ++l) {
    nn::adam_step(layers[l].scale_net, tapes.scale[l], optimizer.scale[l], scale);
    nn::adam_step(layers[l].shift_net, tapes.shift[l], optimizer.shift[l], scale);
  }
  return true;
}

}  // namespace genhmm::flow
