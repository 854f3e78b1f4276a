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

#include "genhmm/gmm_hmm.hpp"

#include <cmath>
#include <string>

#include "genhmm/errors.hpp"
#include "genhmm/logging.hpp"
#include "genhmm/numeric.hpp"
#include "genhmm/parallel.hpp"

namespace genhmm::baseline {
namespace {

Vector global_variance(std::span<const Frames> data) {
  const Eigen::Index n = data.front().cols();
  Vector sum = Vector::Zero(n), sq = Vector::Zero(n);
  double count = 0.0;
  for (const auto& seq : data) {
    sum += seq.colwise().sum().transpose();
    count += static_cast<double>(seq.rows());
  }
  const Vector mean = sum / count;
  for (const auto& seq : data)
    for (Eigen::Index t = 0; t < seq.rows(); ++t)
      sq += (seq.row(t).transpose() - mean).array().square().matrix();
  return (sq / count).cwiseMax(kVarianceFloor);
}

Vector random_frame(std::span<const Frames> data, std::mt19937_64& rng) {
  std::uniform_int_distribution<std::size_t> pick_seq(0, data.size() - 1);
  const Frames& seq = data[pick_seq(rng)];
  std::uniform_int_distribution<Eigen::Index> pick_frame(0, seq.rows() - 1);
  return seq.row(pick_frame(rng)).transpose();
}

void check_data(std::span<const Frames> data) {
  if (data.empty()) throw DataError("GMM-HMM needs a non-empty dataset");
  for (const auto& seq : data) {
    if (seq.rows() < 1) throw DataError("sequence has no frames");
    if (seq.cols() != data.front().cols()) throw ShapeError("sequences disagree on frame width");
  }
}

}  // namespace

void GmmEmission::validate() const {
  mixture.validate();
  const auto S = static_cast<std::size_t>(mixture.num_states());
  if (means.size() != S || variances.size() != S) throw ShapeError("GMM needs one mean/variance block per state");
  for (std::size_t s = 0; s < S; ++s) {
    if (means[s].rows() != mixture.num_components() || variances[s].rows() != mixture.num_components() ||
        means[s].cols() != dim() || variances[s].cols() != dim())
      throw ShapeError("GMM parameter blocks must be K x N");
    if (!means[s].allFinite() || !variances[s].allFinite()) throw NumericalError("non-finite GMM parameter");
    if ((variances[s].array() < kVarianceFloor).any())
      throw NumericalError("GMM variance below floor");
  }
}

GmmHmmModel GmmHmmModel::initialize(std::string label, int states, int components,
                                    std::span<const Frames> data, std::mt19937_64& rng) {
  check_data(data);
  GmmHmmModel model;
  model.label = std::move(label);
  model.core = hmm::HmmCore::left_to_right(states);
  model.emission.mixture = hmm::MixtureWeights::uniform(states, components);
  const Vector var = global_variance(data);
  const Eigen::Index n = data.front().cols();
  for (int s = 0; s < states; ++s) {
    Matrix means(components, n), vars(components, n);
    for (int k = 0; k < components; ++k) {
      means.row(k) = random_frame(data, rng).transpose();
      vars.row(k) = var.transpose();
    }
    model.emission.means.push_back(std::move(means));
    model.emission.variances.push_back(std::move(vars));
  }
  return model;
}

void GmmHmmModel::validate() const {
  core.validate();
  emission.validate();
  if (emission.mixture.num_states() != core.num_states()) throw ShapeError("mixture rows != state count");
}

std::uint64_t GmmHmmModel::fingerprint() const {
  std::uint64_t h = fnv1a(core.initial.data(), sizeof(double) * core.initial.size());
  h = fnv1a(core.transition.data(), sizeof(double) * core.transition.size(), h);
  const auto& w = emission.mixture.weights;
  h = fnv1a(w.data(), sizeof(double) * w.size(), h);
  for (std::size_t s = 0; s < emission.means.size(); ++s) {
    h = fnv1a(emission.means[s].data(), sizeof(double) * emission.means[s].size(), h);
    h = fnv1a(emission.variances[s].data(), sizeof(double) * emission.variances[s].size(), h);
  }
  return h;
}

double diagonal_gaussian_logpdf(const Eigen::Ref<const Vector>& mean,
                                const Eigen::Ref<const Vector>& variance,
                                const Eigen::Ref<const Vector>& x) {
  const double n = static_cast<double>(x.size());
  return -0.5 * (n * kLog2Pi + variance.array().log().sum() +
                 ((x - mean).array().square() / variance.array()).sum());
}

hmm::FrameLogLik gmm_frame_loglik(const GmmEmission& emission, const Frames& seq) {
  if (seq.rows() < 1) throw DataError("sequence has no frames");
  if (seq.cols() != emission.dim())
    throw ShapeError("sequence frame width " + std::to_string(seq.cols()) +
                     " does not match model dimension " + std::to_string(emission.dim()));
  const int S = emission.mixture.num_states(), K = emission.mixture.num_components();
  Matrix component(seq.rows(), S * K);
  for (Eigen::Index t = 0; t < seq.rows(); ++t) {
    const Vector x = seq.row(t).transpose();
    for (int s = 0; s < S; ++s)
      for (int k = 0; k < K; ++k)
        component(t, s * K + k) = diagonal_gaussian_logpdf(
            emission.means[s].row(k).transpose(), emission.variances[s].row(k).transpose(), x);
  }
  return hmm::combine_components(emission.mixture, std::move(component));
}

SequenceScore sequence_loglik(const GmmHmmModel& model, const Frames& seq) {
  const auto ll = gmm_frame_loglik(model.emission, seq);
  const auto post = hmm::forward_backward(model.core, model.emission.mixture, ll);
  return {post.loglik, post.degenerate};
}

EStepResult expectation(const GmmHmmModel& model, std::span<const Frames> data, int threads) {
  EStepResult out;
  out.posteriors.resize(data.size());
  parallel_chunks(data.size(), static_cast<std::size_t>(threads),
                  [&](std::size_t, std::size_t begin, std::size_t end) {
                    for (std::size_t r = begin; r < end; ++r) {
                      const auto ll = gmm_frame_loglik(model.emission, data[r]);
                      out.posteriors[r] = hmm::forward_backward(model.core, model.emission.mixture, ll);
                    }
                  });
  out.stats = hmm::SufficientStatistics(model.num_states(), model.num_components());
  for (std::size_t r = 0; r < data.size(); ++r) {
    const auto& p = out.posteriors[r];
    out.stats.add(p);
    if (p.degenerate) {
      ++out.degenerate;
      continue;
    }
    out.total_loglik += p.loglik;
    out.frames += static_cast<long>(data[r].rows());
  }
  return out;
}

TrainState make_train_state(const GmmHmmModel&, const TrainConfig& config) {
  config.validate();
  TrainState state;
  state.config = config;
  return state;
}

double gmm_em_step(GmmHmmModel& model, std::span<const Frames> data, TrainState& state) {
  check_data(data);
  state.config.validate();
  const int iteration = state.iteration;
  EStepResult old_pass;
  if (state.cached_estep && state.cached_fingerprint == model.fingerprint()) {
    old_pass = std::move(*state.cached_estep);
  } else {
    old_pass = expectation(model, data, state.config.threads);
  }
  state.cached_estep.reset();
  if (std::isnan(state.initial_loglik) && state.history.empty())
    state.initial_loglik = old_pass.average_loglik();
  if (old_pass.stats.sequences() == 0)
    throw NumericalError("GMM-HMM EM iteration " + std::to_string(iteration) + ": every sequence is degenerate");

  const int S = model.num_states(), K = model.num_components();
  const Eigen::Index n = data.front().cols();
  Matrix mass = Matrix::Zero(S, K);
  std::vector<Matrix> weighted_sum(S, Matrix::Zero(K, n));
  for (std::size_t r = 0; r < data.size(); ++r) {
    const auto& post = old_pass.posteriors[r];
    if (post.degenerate) continue;
    for (Eigen::Index t = 0; t < data[r].rows(); ++t)
      for (int s = 0; s < S; ++s)
        for (int k = 0; k < K; ++k) {
          const double w = post.gamma(t, s) * post.kappa(t, s * K + k);
          mass(s, k) += w;
          weighted_sum[s].row(k) += w * data[r].row(t);
        }
  }
  std::vector<Matrix> means(S), variances(S);
  for (int s = 0; s < S; ++s) {
    means[s] = model.emission.means[s];
    variances[s] = Matrix::Zero(K, n);
    for (int k = 0; k < K; ++k)
      if (mass(s, k) > 0.0) means[s].row(k) = weighted_sum[s].row(k) / mass(s, k);
  }
  for (std::size_t r = 0; r < data.size(); ++r) {
    const auto& post = old_pass.posteriors[r];
    if (post.degenerate) continue;
    for (Eigen::Index t = 0; t < data[r].rows(); ++t)
      for (int s = 0; s < S; ++s)
        for (int k = 0; k < K; ++k) {
          const double w = post.gamma(t, s) * post.kappa(t, s * K + k);
          if (w != 0.0) variances[s].row(k) += w * (data[r].row(t) - means[s].row(k)).array().square().matrix();
        }
  }
  const Vector global_var = global_variance(data);
  for (int s = 0; s < S; ++s) {
    for (int k = 0; k < K; ++k) {
      if (mass(s, k) > 0.0) {
        variances[s].row(k) = (variances[s].row(k) / mass(s, k)).cwiseMax(kVarianceFloor);
      } else {
        std::mt19937_64 rng(derive_seed(state.config.seed, static_cast<std::uint64_t>(iteration),
                                        static_cast<std::uint64_t>(s * K + k)));
        means[s].row(k) = random_frame(data, rng).transpose();
        variances[s].row(k) = global_var.transpose();
        log_warning("GMM-HMM EM iteration " + std::to_string(iteration) + ": state " + std::to_string(s) +
                    " component " + std::to_string(k) + " had no mass; reseeded from a random frame");
      }
    }
  }
  model.core.initial = hmm::update_initial(old_pass.stats, model.core.initial);
  model.core.transition = hmm::update_transition(old_pass.stats, model.core.transition);
  model.emission.mixture.weights = hmm::update_mixture(old_pass.stats, model.emission.mixture.weights);
  model.emission.means = std::move(means);
  model.emission.variances = std::move(variances);

  EStepResult new_pass = expectation(model, data, state.config.threads);
  const double loglik = new_pass.average_loglik();
  state.degenerate_sequences = new_pass.degenerate;
  state.cached_fingerprint = model.fingerprint();
  state.cached_estep = std::move(new_pass);
  record_iteration(state, loglik, "GMM-HMM");
  return loglik;
}

void train(GmmHmmModel& model, std::span<const Frames> data, TrainState& state,
           const IterationCallback<GmmHmmModel>& on_iteration) {
  state.config.validate();
  while (!state.converged && state.iteration < state.config.max_iterations) {
    gmm_em_step(model, data, state);
    if (on_iteration && !on_iteration(model, state)) break;
  }
}

Classification classify(std::span<const GmmHmmModel> models, const Frames& seq, bool per_frame) {
  if (models.empty()) throw ConfigError("classification needs at least one model");
  Classification out;
  for (const auto& m : models) {
    if (m.dim() != models.front().dim()) throw ShapeError("models disagree on the frame dimension");
    const auto score = sequence_loglik(m, seq);
    double v = score.degenerate ? kNegInf : score.loglik;
    if (per_frame && v != kNegInf) v /= static_cast<double>(seq.rows());
    out.scores.push_back(v);
  }
  out.index = argmax_class(out.scores);
  return out;
}

}  // namespace genhmm::baseline
