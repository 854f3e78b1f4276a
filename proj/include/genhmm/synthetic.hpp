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

#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <variant>
#include <vector>

#include "genhmm/dataset.hpp"
#include "genhmm/genhmm_model.hpp"
#include "genhmm/gmm_hmm.hpp"

// Desk-scale benchmark data sampled from known ground-truth models.
namespace genhmm::data {

using GroundTruth = std::variant<GenHmmModel, baseline::GmmHmmModel>;

struct SyntheticSpec {
  std::vector<GroundTruth> classes;  // labels taken from each model
  int train_per_class = 100;
  int test_per_class = 50;
  int min_length = 8;
  int max_length = 16;
  std::uint64_t seed = 0;
  // Optional fixed map applied to every sampled frame.
  std::function<Vector(const Vector&)> warp;

  void validate() const;
};

struct SyntheticSplit {
  SequenceDataset train;
  SequenceDataset test;
};

// Samples a state path from (q, A), a component per frame from Pi, and the
// frame from that component's emission. `states` receives the path.
Frames sample_sequence(const GenHmmModel& model, int length, std::mt19937_64& rng,
                       std::vector<int>* states = nullptr);
Frames sample_sequence(const baseline::GmmHmmModel& model, int length, std::mt19937_64& rng,
                       std::vector<int>* states = nullptr);

// Deterministic in spec.seed.
SyntheticSplit make_synthetic(const SyntheticSpec& spec);

// A coupling block whose inverse subtracts `offset`, so its generator
// direction adds it.
std::vector<flow::CouplingLayer> translation_block(const Vector& offset, const flow::FlowConfig& config);

// Triangular smooth bijection used for the warped benchmark:
// y_0 = x_0 and y_i = x_i + strength * sin(y_{i-1}) * y_{i-1}.
Vector warp_frame(const Vector& x, double strength);

enum class SyntheticPreset {
  kSeparated,   // flow classes with well-separated state means
  kWarped,      // overlapping flow classes passed through warp_frame
  kMultimodal,  // three far-apart modes per state
};

struct PresetOptions {
  int classes = 3;
  int dim = 4;
  int states = 3;
  int components = 2;
  int train_per_class = 100;
  int test_per_class = 50;
  int min_length = 8;
  int max_length = 16;
  std::uint64_t seed = 0;
};

SyntheticSpec make_preset(SyntheticPreset preset, const PresetOptions& options);

}  // namespace genhmm::data
