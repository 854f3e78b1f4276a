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

#include "genhmm/genhmm_model.hpp"
#include "genhmm/hmm.hpp"
#include "genhmm/training.hpp"
#include "genhmm/types.hpp"

// Reference HMM with diagonal-covariance Gaussian mixture emissions, trained
// by exact Baum-Welch through the same forward-backward and update code.
namespace genhmm::baseline {

inline constexpr double kVarianceFloor = 1e-6;

struct GmmEmission {
  hmm::MixtureWeights mixture;
  std::vector<Matrix> means;      // per state: K x N
  std::vector<Matrix> variances;  // per state: K x N, entries >= floor

  int dim() const { return means.empty() ? 0 : static_cast<int>(means.front().cols()); }
  void validate() const;
};

class GmmHmmModel {
 public:
  // q uniform, A upper triangular, weights uniform, means drawn from random
  // frames of `data`, variances set to the global per-dimension variance.
  static GmmHmmModel initialize(std::string label, int states, int components,
                                std::span<const Frames> data, std::mt19937_64& rng);

  int num_states() const { return core.num_states(); }
  int num_components() const { return emission.mixture.num_components(); }
  int dim() const { return emission.dim(); }

  void validate() const;
  std::uint64_t fingerprint() const;

  std::string label;
  hmm::HmmCore core;
  GmmEmission emission;
};

double diagonal_gaussian_logpdf(const Eigen::Ref<const Vector>& mean,
                                const Eigen::Ref<const Vector>& variance,
                                const Eigen::Ref<const Vector>& x);

hmm::FrameLogLik gmm_frame_loglik(const GmmEmission& emission, const Frames& seq);

SequenceScore sequence_loglik(const GmmHmmModel& model, const Frames& seq);

EStepResult expectation(const GmmHmmModel& model, std::span<const Frames> data, int threads = 1);

TrainState make_train_state(const GmmHmmModel& model, const TrainConfig& config);

// One exact Baum-Welch iteration. Components with zero responsibility mass
// are reseeded from a random frame. Returns the updated average per-frame
// log-likelihood.
double gmm_em_step(GmmHmmModel& model, std::span<const Frames> data, TrainState& state);

void train(GmmHmmModel& model, std::span<const Frames> data, TrainState& state,
           const IterationCallback<GmmHmmModel>& on_iteration = {});

Classification classify(std::span<const GmmHmmModel> models, const Frames& seq,
                        bool per_frame = false);

}  // namespace genhmm::baseline
