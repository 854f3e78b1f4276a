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

#include <span>
#include <vector>

#include "genhmm/types.hpp"

// Log-space forward-backward and the closed-form M-step updates shared by
// the flow-emission and Gaussian-emission models.
namespace genhmm::hmm {

struct HmmCore {
  Vector initial;     // q, length |S|
  Matrix transition;  // A, |S| x |S|, row-stochastic

  int num_states() const { return static_cast<int>(initial.size()); }

  // Uniform q; A upper triangular with uniform mass on j >= i.
  static HmmCore left_to_right(int states);
  static HmmCore uniform(int states);

  // Throws unless q and every row of A are distributions (tolerance 1e-9).
  void validate() const;
};

// Pi: |S| x K matrix of mixture weights, rows sum to one.
struct MixtureWeights {
  Matrix weights;

  int num_states() const { return static_cast<int>(weights.rows()); }
  int num_components() const { return static_cast<int>(weights.cols()); }

  static MixtureWeights uniform(int states, int components);
  void validate() const;
};

// Emission log-likelihoods of one sequence.
struct FrameLogLik {
  Matrix state;      // T x |S|: log p(x_t | s)
  Matrix component;  // T x (|S| * K): log p(x_t | s, k) at column s * K + k
  int num_components = 1;

  int length() const { return static_cast<int>(state.rows()); }
  int num_states() const { return static_cast<int>(state.cols()); }
};

// Fills `state` from `component` by log-sum-exp with log Pi.
FrameLogLik combine_components(const MixtureWeights& mixture, Matrix component);

struct PosteriorTables {
  Matrix gamma;             // T x |S|
  std::vector<Matrix> xi;   // T-1 entries of |S| x |S|
  Matrix kappa;             // T x (|S| * K), normalized over k per (t, s)
  double loglik = 0.0;      // log p(sequence)
  bool degenerate = false;  // some frame cannot be emitted by any state
  int kappa_fallbacks = 0;  // (t, s) cells where every component was -inf
};

// Component posteriors p(k | s, x_t), normalized in log space. Cells whose
// components are all -inf fall back to uniform; their count is written to
// `fallbacks` when given.
Matrix kappa_posterior(const MixtureWeights& mixture, const FrameLogLik& ll, int* fallbacks = nullptr);

// Exact posteriors. A degenerate sequence yields loglik = -inf and
// `degenerate` set; its tables are left zero.
PosteriorTables forward_backward(const HmmCore& core, const MixtureWeights& mixture,
                                 const FrameLogLik& ll);

// Posterior mass folded over sequences; degenerate sequences are skipped.
class SufficientStatistics {
 public:
  SufficientStatistics(int states, int components);

  void add(const PosteriorTables& post);
  void merge(const SufficientStatistics& other);

  int sequences() const { return sequences_; }
  int transitions_seen() const { return transition_sequences_; }
  int skipped() const { return skipped_; }

  const Vector& initial_mass() const { return initial_; }
  const Matrix& transition_mass() const { return transition_; }
  const Matrix& mixture_mass() const { return mixture_; }

 private:
  Vector initial_;
  Matrix transition_;
  Matrix mixture_;
  int sequences_ = 0;
  int transition_sequences_ = 0;
  int skipped_ = 0;
};

// q_i = (1/R) sum_r gamma_r[0][i]. Keeps `previous` when no sequence is usable.
Vector update_initial(const SufficientStatistics& stats, const Vector& previous);
// A_ij = xi_ij / sum_k xi_ik; rows with zero mass keep their previous values.
Matrix update_transition(const SufficientStatistics& stats, const Matrix& previous);
// pi_sk = sum gamma*kappa / sum over k; zero-mass rows keep previous values.
Matrix update_mixture(const SufficientStatistics& stats, const Matrix& previous);

Vector update_initial(std::span<const PosteriorTables> posts, const Vector& previous);
Matrix update_transition(std::span<const PosteriorTables> posts, const Matrix& previous);
Matrix update_mixture(std::span<const PosteriorTables> posts, const Matrix& previous);

}  // namespace genhmm::hmm
