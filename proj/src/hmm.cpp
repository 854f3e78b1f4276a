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

#include "genhmm/hmm.hpp"

#include <cmath>
#include <string>

#include "genhmm/errors.hpp"
#include "genhmm/logging.hpp"
#include "genhmm/numeric.hpp"

namespace genhmm::hmm {
namespace {

constexpr double kStochasticTolerance = 1e-9;

void check_distribution(const Eigen::Ref<const Vector>& p, const std::string& what) {
  if ((p.array() < 0.0).any() || !p.allFinite()) throw NumericalError(what + " has invalid entries");
  if (std::abs(p.sum() - 1.0) > kStochasticTolerance) throw NumericalError(what + " does not sum to 1");
}

SufficientStatistics fold(std::span<const PosteriorTables> posts) {
  if (posts.empty()) throw DataError("no posterior tables to fold");
  const auto& first = posts.front();
  const int states = static_cast<int>(first.gamma.cols());
  const int comps = states > 0 ? static_cast<int>(first.kappa.cols()) / states : 1;
  SufficientStatistics stats(states, comps);
  for (const auto& p : posts) stats.add(p);
  return stats;
}

}  // namespace

HmmCore HmmCore::left_to_right(int states) {
  if (states < 1) throw ConfigError("state count must be positive");
  HmmCore core;
  core.initial = Vector::Constant(states, 1.0 / states);
  core.transition = Matrix::Zero(states, states);
  for (int i = 0; i < states; ++i)
    core.transition.row(i).tail(states - i).setConstant(1.0 / (states - i));
  return core;
}

HmmCore HmmCore::uniform(int states) {
  if (states < 1) throw ConfigError("state count must be positive");
  HmmCore core;
  core.initial = Vector::Constant(states, 1.0 / states);
  core.transition = Matrix::Constant(states, states, 1.0 / states);
  return core;
}

void HmmCore::validate() const {
  if (initial.size() < 1) throw ShapeError("HMM needs at least one state");
  if (transition.rows() != initial.size() || transition.cols() != initial.size())
    throw ShapeError("transition matrix must be |S| x |S|");
  check_distribution(initial, "initial distribution");
  for (Eigen::Index i = 0; i < transition.rows(); ++i)
    check_distribution(transition.row(i).transpose(), "transition row " + std::to_string(i));
}

MixtureWeights MixtureWeights::uniform(int states, int components) {
  if (states < 1 || components < 1) throw ConfigError("state and component counts must be positive");
  return {Matrix::Constant(states, components, 1.0 / components)};
}

void MixtureWeights::validate() const {
  if (weights.rows() < 1 || weights.cols() < 1) throw ShapeError("mixture weights are empty");
  for (Eigen::Index s = 0; s < weights.rows(); ++s)
    check_distribution(weights.row(s).transpose(), "mixture row " + std::to_string(s));
}

FrameLogLik combine_components(const MixtureWeights& mixture, Matrix component) {
  const int S = mixture.num_states(), K = mixture.num_components();
  if (component.cols() != S * K) throw ShapeError("component table must have |S|*K columns");
  FrameLogLik ll;
  ll.num_components = K;
  ll.state.resize(component.rows(), S);
  const Matrix log_pi = mixture.weights.unaryExpr([](double p) { return safe_log(p); });
  for (Eigen::Index t = 0; t < component.rows(); ++t) {
    for (int s = 0; s < S; ++s) {
      const Vector terms = log_pi.row(s).transpose() + component.row(t).segment(s * K, K).transpose();
      ll.state(t, s) = logsumexp(terms);
    }
  }
  ll.component = std::move(component);
  return ll;
}

Matrix kappa_posterior(const MixtureWeights& mixture, const FrameLogLik& ll, int* fallbacks) {
  const int S = mixture.num_states(), K = mixture.num_components();
  if (ll.component.cols() != S * K) throw ShapeError("component table must have |S|*K columns");
  const Matrix log_pi = mixture.weights.unaryExpr([](double p) { return safe_log(p); });
  Matrix post(ll.component.rows(), S * K);
  int fallback_count = 0;
  for (Eigen::Index t = 0; t < ll.component.rows(); ++t) {
    for (int s = 0; s < S; ++s) {
      const Vector terms = log_pi.row(s).transpose() + ll.component.row(t).segment(s * K, K).transpose();
      const double norm = logsumexp(terms);
      if (norm == kNegInf) {
        post.row(t).segment(s * K, K).setConstant(1.0 / K);
        ++fallback_count;
      } else {
        post.row(t).segment(s * K, K) = (terms.array() - norm).exp().matrix().transpose();
      }
    }
  }
  if (fallback_count > 0)
    log_warning("kappa posterior: " + std::to_string(fallback_count) +
                " (frame, state) cells had no finite component; using uniform");
  if (fallbacks) *fallbacks = fallback_count;
  return post;
}

PosteriorTables forward_backward(const HmmCore& core, const MixtureWeights& mixture,
                                 const FrameLogLik& ll) {
  const int S = core.num_states();
  const int T = ll.length();
  if (T < 1) throw DataError("forward-backward needs at least one frame");
  if (ll.num_states() != S || mixture.num_states() != S)
    throw ShapeError("log-likelihood table does not match the state count");
  if ((ll.state.array().isNaN()).any() || (ll.state.array() == std::numeric_limits<double>::infinity()).any())
    throw NumericalError("emission log-likelihoods contain NaN or +inf");

  PosteriorTables out;
  out.gamma = Matrix::Zero(T, S);
  out.xi.assign(T > 1 ? T - 1 : 0, Matrix::Zero(S, S));
  out.kappa = Matrix::Zero(T, ll.component.cols());

  for (int t = 0; t < T; ++t) {
    if (ll.state.row(t).maxCoeff() == kNegInf) {
      out.degenerate = true;
      out.loglik = kNegInf;
      return out;
    }
  }

  const Vector log_q = core.initial.unaryExpr([](double p) { return safe_log(p); });
  const Matrix log_a = core.transition.unaryExpr([](double p) { return safe_log(p); });

  Matrix alpha(T, S), beta(T, S);
  alpha.row(0) = log_q.transpose() + ll.state.row(0);
  Vector terms(S);
  for (int t = 1; t < T; ++t) {
    for (int j = 0; j < S; ++j) {
      for (int i = 0; i < S; ++i) terms(i) = alpha(t - 1, i) + log_a(i, j);
      alpha(t, j) = logsumexp(terms) + ll.state(t, j);
    }
  }
  beta.row(T - 1).setZero();
  for (int t = T - 2; t >= 0; --t) {
    for (int i = 0; i < S; ++i) {
      for (int j = 0; j < S; ++j) terms(j) = log_a(i, j) + ll.state(t + 1, j) + beta(t + 1, j);
      beta(t, i) = logsumexp(terms);
    }
  }
  const double loglik = logsumexp(alpha.row(T - 1));
  if (loglik == kNegInf) {
    // Every frame is individually emittable but no path connects them.
    out.degenerate = true;
    out.loglik = kNegInf;
    return out;
  }
  out.loglik = loglik;
  for (int t = 0; t < T; ++t)
    out.gamma.row(t) = (alpha.row(t) + beta.row(t)).array().unaryExpr([&](double v) {
      return v == kNegInf ? 0.0 : std::exp(v - loglik);
    });
  for (int t = 0; t + 1 < T; ++t) {
    Matrix& xi = out.xi[t];
    for (int i = 0; i < S; ++i) {
      for (int j = 0; j < S; ++j) {
        const double v = alpha(t, i) + log_a(i, j) + ll.state(t + 1, j) + beta(t + 1, j);
        xi(i, j) = v == kNegInf ? 0.0 : std::exp(v - loglik);
      }
    }
  }
  out.kappa = kappa_posterior(mixture, ll, &out.kappa_fallbacks);
  return out;
}

SufficientStatistics::SufficientStatistics(int states, int components)
    : initial_(Vector::Zero(states)),
      transition_(Matrix::Zero(states, states)),
      mixture_(Matrix::Zero(states, components)) {}

void SufficientStatistics::add(const PosteriorTables& post) {
  if (post.degenerate) {
    ++skipped_;
    return;
  }
  const int S = static_cast<int>(initial_.size());
  const int K = static_cast<int>(mixture_.cols());
  if (post.gamma.cols() != S || post.kappa.cols() != S * K)
    throw ShapeError("posterior tables do not match the statistics shape");
  initial_ += post.gamma.row(0).transpose();
  for (const auto& xi : post.xi) transition_ += xi;
  if (!post.xi.empty()) ++transition_sequences_;
  for (Eigen::Index t = 0; t < post.gamma.rows(); ++t)
    for (int s = 0; s < S; ++s)
      mixture_.row(s) += post.gamma(t, s) * post.kappa.row(t).segment(s * K, K);
  ++sequences_;
}

void SufficientStatistics::merge(const SufficientStatistics& other) {
  if (other.initial_.size() != initial_.size() || other.mixture_.cols() != mixture_.cols())
    throw ShapeError("cannot merge statistics of different shapes");
  initial_ += other.initial_;
  transition_ += other.transition_;
  mixture_ += other.mixture_;
  sequences_ += other.sequences_;
  transition_sequences_ += other.transition_sequences_;
  skipped_ += other.skipped_;
}

Vector update_initial(const SufficientStatistics& stats, const Vector& previous) {
  if (stats.sequences() == 0) {
    log_warning("initial-state update skipped: no usable sequences");
    return previous;
  }
  return stats.initial_mass() / static_cast<double>(stats.sequences());
}

Matrix update_transition(const SufficientStatistics& stats, const Matrix& previous) {
  if (stats.transitions_seen() == 0) {
    log_warning("transition update skipped: no sequence has two or more frames");
    return previous;
  }
  Matrix next = previous;
  const Matrix& mass = stats.transition_mass();
  for (Eigen::Index i = 0; i < mass.rows(); ++i) {
    const double total = mass.row(i).sum();
    if (total > 0.0) next.row(i) = mass.row(i) / total;
  }
  return next;
}

Matrix update_mixture(const SufficientStatistics& stats, const Matrix& previous) {
  if (stats.sequences() == 0) return previous;
  Matrix next = previous;
  const Matrix& mass = stats.mixture_mass();
  for (Eigen::Index s = 0; s < mass.rows(); ++s) {
    const double total = mass.row(s).sum();
    if (total > 0.0) next.row(s) = mass.row(s) / total;
  }
  return next;
}

Vector update_initial(std::span<const PosteriorTables> posts, const Vector& previous) {
  return update_initial(fold(posts), previous);
}

Matrix update_transition(std::span<const PosteriorTables> posts, const Matrix& previous) {
  return update_transition(fold(posts), previous);
}

Matrix update_mixture(std::span<const PosteriorTables> posts, const Matrix& previous) {
  return update_mixture(fold(posts), previous);
}

}  // namespace genhmm::hmm
