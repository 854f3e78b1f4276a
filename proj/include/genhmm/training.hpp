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
#include <limits>
#include <optional>
#include <vector>

#include "genhmm/flow.hpp"
#include "genhmm/hmm.hpp"
#include "genhmm/nn.hpp"

namespace genhmm {

struct TrainConfig {
  nn::AdamConfig adam;
  // Sequences per gradient batch (R_b); 0 or >= R uses the whole set.
  int batch_size = 0;
  // Gradient batches per EM iteration (N).
  int inner_batches = 10;
  int max_iterations = 50;
  // Stop when |LL_new - LL_old| / |LL_new| < tolerance.
  double tolerance = 1e-4;
  std::uint64_t seed = 0;
  int threads = 1;
  // Allowed per-frame decrease of the average log-likelihood before an
  // iteration is counted as a monotonicity violation.
  double monotonic_slack = 1e-3;

  // Throws ConfigError on invalid values.
  void validate() const;
};

// Result of one full E-pass: posteriors for every sequence under a fixed
// model plus their folded statistics.
struct EStepResult {
  std::vector<hmm::PosteriorTables> posteriors;
  hmm::SufficientStatistics stats{1, 1};
  double total_loglik = 0.0;  // over non-degenerate sequences
  long frames = 0;            // frames of non-degenerate sequences
  int degenerate = 0;

  double average_loglik() const {
    return frames > 0 ? total_loglik / static_cast<double>(frames)
                      : -std::numeric_limits<double>::infinity();
  }
};

struct TrainState {
  TrainConfig config;
  int iteration = 0;
  // Average per-frame log-likelihood before the first iteration.
  double initial_loglik = std::numeric_limits<double>::quiet_NaN();
  // history[i]: average per-frame log-likelihood after iteration i.
  std::vector<double> history;
  // One Adam state per generator (flow models only).
  std::vector<flow::FlowOptimizer> optimizers;
  bool converged = false;
  int monotonicity_violations = 0;
  long skipped_terms = 0;
  long rejected_steps = 0;
  int degenerate_sequences = 0;

  // E-pass of the current parameters, reused by the next iteration when the
  // parameter fingerprint still matches.
  std::optional<EStepResult> cached_estep;
  std::uint64_t cached_fingerprint = 0;

  double previous_loglik() const { return history.empty() ? initial_loglik : history.back(); }
};

// Called after each completed iteration; return false to stop early.
template <typename Model>
using IterationCallback = std::function<bool(const Model&, const TrainState&)>;

// Records `loglik` as the result of the iteration that just finished and
// updates convergence and monotonicity bookkeeping.
void record_iteration(TrainState& state, double loglik, const char* model_name);

}  // namespace genhmm
