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

#include "genhmm/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "genhmm/errors.hpp"
#include "genhmm/numeric.hpp"

namespace genhmm::data {
namespace {

int sample_index(const Eigen::Ref<const Vector>& probs, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double target = u(rng);
  double acc = 0.0;
  for (Eigen::Index i = 0; i < probs.size(); ++i) {
    acc += probs(i);
    if (target < acc) return static_cast<int>(i);
  }
  // Rounding left a sliver above the cumulative sum; pick the last nonzero.
  for (Eigen::Index i = probs.size(); i-- > 0;)
    if (probs(i) > 0.0) return static_cast<int>(i);
  return 0;
}

template <typename EmitFn>
Frames sample_path(const hmm::HmmCore& core, const Matrix& mixture, int dim, int length,
                   std::mt19937_64& rng, std::vector<int>* states, EmitFn&& emit) {
  if (length < 1) throw ConfigError("sampled sequences need length >= 1");
  Frames out(length, dim);
  if (states) states->clear();
  int s = sample_index(core.initial, rng);
  for (int t = 0; t < length; ++t) {
    if (t > 0) s = sample_index(core.transition.row(s).transpose(), rng);
    if (states) states->push_back(s);
    const int k = sample_index(mixture.row(s).transpose(), rng);
    out.row(t) = emit(s, k).transpose();
  }
  return out;
}

std::string label_of(const GroundTruth& gt) {
  return std::visit([](const auto& m) { return m.label; }, gt);
}

int dim_of(const GroundTruth& gt) {
  return std::visit([](const auto& m) { return m.dim(); }, gt);
}

hmm::HmmCore left_to_right_chain(int states, double stay) {
  hmm::HmmCore core;
  core.initial = Vector::Zero(states);
  core.initial(0) = 1.0;
  core.transition = Matrix::Zero(states, states);
  for (int i = 0; i < states; ++i) {
    if (i + 1 < states) {
      core.transition(i, i) = stay;
      core.transition(i, i + 1) = 1.0 - stay;
    } else {
      core.transition(i, i) = 1.0;
    }
  }
  return core;
}

// Random coupling blocks with all weights multiplied by `scale`.
void append_random_blocks(std::vector<flow::CouplingLayer>& layers, const flow::FlowConfig& config,
                          int blocks, double scale, std::mt19937_64& rng) {
  for (int b = 0; b < blocks; ++b) {
    for (auto& layer : flow::make_block(config, &rng)) {
      for (auto* net : {&layer.scale_net, &layer.shift_net})
        for (auto& dense : net->layers()) dense.weight *= scale;
      layers.push_back(std::move(layer));
    }
  }
}

// One block whose first layer scales coordinate b_j by exp(-s(x_{a_j}))
// in the generative direction, with s a smooth monotone map of slope fan_j.
std::vector<flow::CouplingLayer> fan_block(const Vector& fan, const flow::FlowConfig& config) {
  auto block = flow::make_block(config, nullptr);
  auto& layer = block.front();
  auto& dense = layer.scale_net.layers();
  const int as = layer.a_size(config.dim);
  for (Eigen::Index j = 0; j < fan.size(); ++j) {
    const int a = static_cast<int>(j % as);
    dense[0].weight(j, a) = 0.5;
    for (std::size_t l = 1; l + 1 < dense.size(); ++l) dense[l].weight(j, j) = 1.0;
    dense.back().weight(j, j) += 2.0 * fan(j);
  }
  return block;
}

Vector random_vector(int dim, double stddev, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, stddev);
  Vector v(dim);
  for (int i = 0; i < dim; ++i) v(i) = normal(rng);
  return v;
}

}  // namespace

void SyntheticSpec::validate() const {
  if (classes.empty()) throw ConfigError("synthetic spec needs at least one class");
  if (train_per_class < 0 || test_per_class < 0) throw ConfigError("per-class counts must be >= 0");
  if (min_length < 1 || max_length < min_length) throw ConfigError("invalid sequence length range");
  const int dim = dim_of(classes.front());
  for (const auto& c : classes) {
    if (dim_of(c) != dim) throw ConfigError("ground-truth classes disagree on the frame dimension");
    std::visit([](const auto& m) { m.validate(); }, c);
  }
  for (std::size_t i = 0; i < classes.size(); ++i)
    for (std::size_t j = i + 1; j < classes.size(); ++j)
      if (label_of(classes[i]) == label_of(classes[j])) throw ConfigError("duplicate class label");
}

Frames sample_sequence(const GenHmmModel& model, int length, std::mt19937_64& rng, std::vector<int>* states) {
  std::normal_distribution<double> normal(0.0, 1.0);
  return sample_path(model.core, model.mixture.weights, model.dim(), length, rng, states, [&](int s, int k) {
    Vector z(model.dim());
    for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = normal(rng);
    return flow::flow_forward(model.generator(s, k), z);
  });
}

Frames sample_sequence(const baseline::GmmHmmModel& model, int length, std::mt19937_64& rng,
                       std::vector<int>* states) {
  std::normal_distribution<double> normal(0.0, 1.0);
  const auto& em = model.emission;
  return sample_path(model.core, em.mixture.weights, model.dim(), length, rng, states, [&](int s, int k) {
    Vector x(model.dim());
    for (Eigen::Index i = 0; i < x.size(); ++i)
      x(i) = em.means[s](k, i) + std::sqrt(em.variances[s](k, i)) * normal(rng);
    return x;
  });
}

SyntheticSplit make_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  const int dim = dim_of(spec.classes.front());
  SyntheticSplit out{SequenceDataset(dim), SequenceDataset(dim)};
  for (int split = 0; split < 2; ++split) {
    SequenceDataset& ds = split == 0 ? out.train : out.test;
    const int count = split == 0 ? spec.train_per_class : spec.test_per_class;
    // Interleave classes so every split registers labels in class order.
    for (int i = 0; i < count; ++i) {
      for (std::size_t c = 0; c < spec.classes.size(); ++c) {
        std::mt19937_64 rng(derive_seed(spec.seed, c * 2 + static_cast<std::uint64_t>(split),
                                        static_cast<std::uint64_t>(i)));
        std::uniform_int_distribution<int> len(spec.min_length, spec.max_length);
        const int length = len(rng);
        Frames f = std::visit([&](const auto& m) { return sample_sequence(m, length, rng); }, spec.classes[c]);
        if (spec.warp)
          for (Eigen::Index t = 0; t < f.rows(); ++t) f.row(t) = spec.warp(f.row(t).transpose()).transpose();
        ds.add(label_of(spec.classes[c]), std::move(f));
      }
    }
  }
  return out;
}

std::vector<flow::CouplingLayer> translation_block(const Vector& offset, const flow::FlowConfig& config) {
  if (offset.size() != config.dim) throw ShapeError("translation offset must have the frame dimension");
  auto block = flow::make_block(config, nullptr);
  for (auto& layer : block) {
    const Vector target = -offset.segment(layer.b_offset(), layer.b_size(config.dim));
    layer.shift_net.layers().back().bias = target;
  }
  return block;
}

Vector warp_frame(const Vector& x, double strength) {
  Vector y = x;
  for (Eigen::Index i = 1; i < y.size(); ++i) y(i) = x(i) + strength * std::sin(y(i - 1)) * y(i - 1);
  return y;
}

SyntheticSpec make_preset(SyntheticPreset preset, const PresetOptions& o) {
  if (o.classes < 1 || o.dim < 2 || o.states < 1 || o.components < 1)
    throw ConfigError("invalid synthetic preset options");
  SyntheticSpec spec;
  spec.train_per_class = o.train_per_class;
  spec.test_per_class = o.test_per_class;
  spec.min_length = o.min_length;
  spec.max_length = o.max_length;
  spec.seed = o.seed;
  std::mt19937_64 rng(derive_seed(o.seed, 0x5eedu));
  flow::FlowConfig cfg;
  cfg.dim = o.dim;
  cfg.hidden_width = std::max(8, o.dim);
  cfg.blocks = 1;

  const int components = preset == SyntheticPreset::kMultimodal ? 3 : o.components;
  // Warped classes share every state mean and differ only in the fan pattern.
  std::vector<Vector> shared;
  if (preset == SyntheticPreset::kWarped) {
    for (int s = 0; s < o.states; ++s) {
      const Vector center = random_vector(o.dim, 1.5, rng);
      for (int k = 0; k < components; ++k) shared.push_back(center + random_vector(o.dim, 0.7, rng));
    }
    spec.warp = [](const Vector& x) { return warp_frame(x, 0.5); };
  }

  for (int c = 0; c < o.classes; ++c) {
    GenHmmModel model;
    model.label = "c" + std::to_string(c);
    model.core = left_to_right_chain(o.states, 0.7);
    model.mixture = hmm::MixtureWeights::uniform(o.states, components);
    Vector fan(o.dim - (o.dim + 1) / 2);
    for (Eigen::Index j = 0; j < fan.size(); ++j) fan(j) = ((c >> (j % 2)) & 1) ? -1.0 : 1.0;
    if (c >= 4) fan *= 0.5;
    for (int s = 0; s < o.states; ++s) {
      const Vector center = random_vector(o.dim, preset == SyntheticPreset::kMultimodal ? 1.0 : 2.5, rng);
      for (int k = 0; k < components; ++k) {
        std::vector<flow::CouplingLayer> layers;
        switch (preset) {
          case SyntheticPreset::kSeparated:
            layers = translation_block(k == 0 ? center : Vector(center + random_vector(o.dim, 1.25, rng)), cfg);
            append_random_blocks(layers, cfg, 1, 0.3, rng);
            break;
          case SyntheticPreset::kWarped:
            layers = translation_block(shared[static_cast<std::size_t>(s * components + k)], cfg);
            for (auto& layer : fan_block(fan, cfg)) layers.push_back(std::move(layer));
            break;
          case SyntheticPreset::kMultimodal: {
            const Vector dir = random_vector(o.dim, 1.0, rng).normalized();
            layers = translation_block(center + 4.0 * dir, cfg);
            append_random_blocks(layers, cfg, 1, 0.1, rng);
            break;
          }
        }
        model.generators.emplace_back(o.dim, std::move(layers));
      }
    }
    spec.classes.emplace_back(std::move(model));
  }
  return spec;
}

}  // namespace genhmm::data
