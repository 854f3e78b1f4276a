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
#include <random>
#include <span>
#include <string>
#include <vector>

#include "genhmm/flow.hpp"
#include "genhmm/hmm.hpp"
#include "genhmm/training.hpp"
#include "genhmm/types.hpp"

namespace genhmm {

// One class model: an HMM whose state emissions are mixtures of K flow
// generators sharing the frame dimension.
class GenHmmModel {
 public:
  // q uniform, A upper triangular, Pi uniform, generators Glorot-random.
  static GenHmmModel initialize(std::string label, int states, int components,
                                const flow::FlowConfig& flow, std::mt19937_64& rng);

  int num_states() const { return core.num_states(); }
  int num_components() const { return mixture.num_components(); }
  int dim() const { return generators.empty() ? 0 : generators.front().dim(); }

  const flow::FlowGenerator& generator(int state, int component) const {
    return generators[static_cast<std::size_t>(state * num_components() + component)];
  }
  flow::FlowGenerator& generator(int state, int component) {
    return generators[static_cast<std::size_t>(state * num_components() + component)];
  }

  void validate() const;

  // Hash over every parameter; equal fingerprints mean equal parameters.
  std::uint64_t fingerprint() const;

  std::string label;
  hmm::HmmCore core;
  hmm::MixtureWeights mixture;
  std::vector<flow::FlowGenerator> generators;  // index state * K + component
};

// Mean length / frames_per_state, rounded and clipped into {3, 4, 5}.
int heuristic_state_count(double mean_length, int frames_per_state = 3);

hmm::FrameLogLik frame_loglik_table(const GenHmmModel& model, const Frames& seq);

struct SequenceScore {
  double loglik = 0.0;
  bool degenerate = false;
};

SequenceScore sequence_loglik(const GenHmmModel& model, const Frames& seq);

// Full E-pass over `data` with the current parameters.
EStepResult expectation(const GenHmmModel& model, std::span<const Frames> data, int threads = 1);

// Generator objective Q(Theta; H_old): posterior-weighted flow
// log-likelihoods summed over frames, states and components, divided by the
// total frame count of the non-degenerate sequences.
double generator_objective(const GenHmmModel& model, std::span<const Frames> data,
                           std::span<const hmm::PosteriorTables> posteriors);

// Accumulates the gradient of the un-normalized objective (the sum before
// dividing by the frame count) into `tapes` (one per generator). Returns
// the number of skipped non-finite terms.
long generator_gradient(const GenHmmModel& model, std::span<const Frames> data,
                        std::span<const hmm::PosteriorTables> posteriors,
                        std::span<const std::size_t> indices, std::vector<flow::FlowTapes>& tapes,
                        int threads = 1);

TrainState make_train_state(const GenHmmModel& model, const TrainConfig& config);

// One EM iteration: N gradient batches on Q(Theta; H_old) followed by the
// closed-form q, A and Pi updates from the H_old posteriors. A generator
// whose own term of Q went down is restored and its Adam moments reset
// (counted in rejected_steps). Returns the
// average per-frame log-likelihood of the updated model.
double em_step(GenHmmModel& model, std::span<const Frames> data, TrainState& state);

// Runs em_step until converged, max_iterations, or the callback declines.
void train(GenHmmModel& model, std::span<const Frames> data, TrainState& state,
           const IterationCallback<GenHmmModel>& on_iteration = {});

// Index of the best score; ties go to the lowest index; -1 when every
// score is -inf.
int argmax_class(std::span<const double> scores);

struct Classification {
  int index = -1;  // -1: unclassifiable
  std::vector<double> scores;
};

// Scores are sequence log-likelihoods, divided by T when per_frame is set.
Classification classify(std::span<const GenHmmModel> models, const Frames& seq,
                        bool per_frame = false);

}  // namespace genhmm
