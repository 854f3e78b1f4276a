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

#include <doctest.h>

#include <array>
#include <cmath>
#include <random>

#include "genhmm/errors.hpp"
#include "genhmm/hmm.hpp"
#include "genhmm/numeric.hpp"
#include "oracles.hpp"

using namespace genhmm;
using namespace genhmm::hmm;

namespace {

struct RandomCase {
  HmmCore core;
  MixtureWeights mixture;
  FrameLogLik ll;
};

RandomCase random_case(int S, int K, int T, std::mt19937_64& rng) {
  RandomCase c;
  c.core.initial = testing::random_distribution(S, rng);
  c.core.transition = testing::random_stochastic(S, S, rng);
  c.mixture.weights = testing::random_stochastic(S, K, rng);
  std::normal_distribution<double> n(-3.0, 2.0);
  Matrix comp(T, S * K);
  for (Eigen::Index i = 0; i < comp.size(); ++i) comp.data()[i] = n(rng);
  c.ll = combine_components(c.mixture, comp);
  return c;
}

PosteriorTables random_tables(int S, int K, int T, std::mt19937_64& rng) {
  PosteriorTables p;
  p.gamma = testing::random_stochastic(T, S, rng);
  for (int t = 0; t + 1 < T; ++t) {
    Matrix x = testing::random_stochastic(1, S * S, rng);
    p.xi.push_back(Eigen::Map<Matrix>(x.data(), S, S));
  }
  p.kappa.resize(T, S * K);
  for (int t = 0; t < T; ++t)
    for (int s = 0; s < S; ++s) p.kappa.block(t, s * K, 1, K) = testing::random_distribution(K, rng).transpose();
  return p;
}

}  // namespace

TEST_SUITE("hmm") {

TEST_CASE("logsumexp") {
  const std::array<double, 3> big{1000.0, 1000.0, -INFINITY};
  CHECK(logsumexp(std::span<const double>(big)) == doctest::Approx(1000.0 + std::log(2.0)));
  const std::array<double, 2> none{-INFINITY, -INFINITY};
  CHECK(logsumexp(std::span<const double>(none)) == -INFINITY);
  Vector v(2);
  v << -1e4, -1e4 + std::log(3.0);
  CHECK(logsumexp(v) == doctest::Approx(-1e4 + std::log(4.0)));
}

TEST_CASE("left-to-right initialization") {
  const HmmCore c = HmmCore::left_to_right(4);
  CHECK(c.initial.isApproxToConstant(0.25));
  for (int i = 0; i < 4; ++i) {
    CHECK(c.transition.row(i).sum() == doctest::Approx(1.0));
    for (int j = 0; j < 4; ++j) {
      if (j < i) {
        CHECK(c.transition(i, j) == 0.0);
      } else {
        CHECK(c.transition(i, j) == doctest::Approx(1.0 / (4 - i)));
      }
    }
  }
  CHECK_NOTHROW(c.validate());
  HmmCore bad = c;
  bad.transition(0, 0) += 0.1;
  CHECK_THROWS(bad.validate());
}

TEST_CASE("combine_components is a log-mixture") {
  std::mt19937_64 rng(2);
  const RandomCase c = random_case(2, 3, 4, rng);
  for (int t = 0; t < 4; ++t)
    for (int s = 0; s < 2; ++s) {
      double p = 0.0;
      for (int k = 0; k < 3; ++k) p += c.mixture.weights(s, k) * std::exp(c.ll.component(t, s * 3 + k));
      CHECK(c.ll.state(t, s) == doctest::Approx(std::log(p)).epsilon(1e-13));
    }
}

TEST_CASE("forward-backward equals exhaustive enumeration") {
  std::mt19937_64 rng(42);
  for (int trial = 0; trial < 20; ++trial) {
    const int S = 1 + trial % 3, K = 1 + trial % 2, T = 1 + trial % 5;
    const RandomCase c = random_case(S, K, T, rng);
    const PosteriorTables p = forward_backward(c.core, c.mixture, c.ll);
    const auto e = testing::enumerate_posteriors(c.core.initial, c.core.transition, c.mixture.weights, c.ll.component);
    CHECK_FALSE(p.degenerate);
    CHECK(std::abs(p.loglik - e.loglik) < 1e-9);
    CHECK((p.gamma - e.gamma).cwiseAbs().maxCoeff() < 1e-9);
    CHECK((p.kappa - e.kappa).cwiseAbs().maxCoeff() < 1e-9);
    REQUIRE(p.xi.size() == e.xi.size());
    for (std::size_t t = 0; t < p.xi.size(); ++t) CHECK((p.xi[t] - e.xi[t]).cwiseAbs().maxCoeff() < 1e-9);
  }
}

TEST_CASE("posterior consistency") {
  std::mt19937_64 rng(8);
  const RandomCase c = random_case(3, 2, 7, rng);
  const PosteriorTables p = forward_backward(c.core, c.mixture, c.ll);
  for (int t = 0; t < 7; ++t) CHECK(p.gamma.row(t).sum() == doctest::Approx(1.0).epsilon(1e-12));
  for (int t = 0; t + 1 < 7; ++t) {
    CHECK((p.xi[t].rowwise().sum() - p.gamma.row(t).transpose()).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((p.xi[t].colwise().sum() - p.gamma.row(t + 1)).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("long sequences stay finite") {
  std::mt19937_64 rng(3);
  const RandomCase c = random_case(3, 2, 2000, rng);
  const PosteriorTables p = forward_backward(c.core, c.mixture, c.ll);
  CHECK(std::isfinite(p.loglik));
  CHECK(p.loglik < -2000.0);
  CHECK(all_finite(p.gamma));
}

TEST_CASE("degenerate sequence") {
  std::mt19937_64 rng(1);
  RandomCase c = random_case(2, 2, 4, rng);
  Matrix comp = c.ll.component;
  comp.row(2).setConstant(-INFINITY);
  const FrameLogLik ll = combine_components(c.mixture, comp);
  const PosteriorTables p = forward_backward(c.core, c.mixture, ll);
  CHECK(p.degenerate);
  CHECK(p.loglik == -INFINITY);
  SufficientStatistics stats(2, 2);
  stats.add(p);
  CHECK(stats.skipped() == 1);
  CHECK(stats.sequences() == 0);
}

TEST_CASE("left-to-right topology forbids backward paths") {
  HmmCore core = HmmCore::left_to_right(3);
  core.initial << 0.0, 0.0, 1.0;
  MixtureWeights mix = MixtureWeights::uniform(3, 1);
  Matrix comp = Matrix::Zero(3, 3);
  comp.col(2).setConstant(-INFINITY);  // the only reachable state cannot emit
  const PosteriorTables p = forward_backward(core, mix, combine_components(mix, comp));
  CHECK(p.degenerate);
}

TEST_CASE("kappa falls back to uniform when every component is impossible") {
  MixtureWeights mix = MixtureWeights::uniform(2, 2);
  Matrix comp(1, 4);
  comp << -1.0, -2.0, -INFINITY, -INFINITY;
  const FrameLogLik ll = combine_components(mix, comp);
  int fallbacks = 0;
  const Matrix kappa = kappa_posterior(mix, ll, &fallbacks);
  CHECK(fallbacks == 1);
  CHECK(kappa(0, 2) == 0.5);
  CHECK(kappa(0, 3) == 0.5);
  CHECK(kappa(0, 0) == doctest::Approx(1.0 / (1.0 + std::exp(-1.0))));
}

TEST_CASE("closed-form updates match direct arithmetic") {
  std::mt19937_64 rng(12);
  const int S = 3, K = 2;
  std::vector<PosteriorTables> posts;
  for (int r = 0; r < 4; ++r) posts.push_back(random_tables(S, K, 2 + r, rng));
  const Vector q0 = Vector::Constant(S, 1.0 / S);
  const Matrix A0 = Matrix::Constant(S, S, 1.0 / S);
  const Matrix P0 = Matrix::Constant(S, K, 1.0 / K);

  Vector q = Vector::Zero(S);
  Matrix xi = Matrix::Zero(S, S), num = Matrix::Zero(S, K);
  for (const auto& p : posts) {
    for (int i = 0; i < S; ++i) q(i) += p.gamma(0, i) / 4.0;
    for (const auto& x : p.xi) xi += x;
    for (int t = 0; t < p.gamma.rows(); ++t)
      for (int s = 0; s < S; ++s)
        for (int k = 0; k < K; ++k) num(s, k) += p.gamma(t, s) * p.kappa(t, s * K + k);
  }
  const Vector q_new = update_initial(posts, q0);
  const Matrix A_new = update_transition(posts, A0);
  const Matrix P_new = update_mixture(posts, P0);
  for (int i = 0; i < S; ++i) {
    CHECK(std::abs(q_new(i) - q(i)) < 1e-12);
    for (int j = 0; j < S; ++j) CHECK(std::abs(A_new(i, j) - xi(i, j) / xi.row(i).sum()) < 1e-12);
    for (int k = 0; k < K; ++k) CHECK(std::abs(P_new(i, k) - num(i, k) / num.row(i).sum()) < 1e-12);
  }

  SufficientStatistics stats(S, K);
  for (const auto& p : posts) stats.add(p);
  CHECK((update_transition(stats, A0) - A_new).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("rows without posterior mass keep previous values") {
  PosteriorTables p;
  p.gamma = Matrix(2, 2);
  p.gamma << 1.0, 0.0, 1.0, 0.0;
  Matrix x = Matrix::Zero(2, 2);
  x(0, 0) = 1.0;
  p.xi = {x};
  p.kappa = Matrix::Constant(2, 2, 1.0);
  SufficientStatistics stats(2, 1);
  stats.add(p);
  Matrix prevA(2, 2);
  prevA << 0.5, 0.5, 0.0, 1.0;
  const Matrix A = update_transition(stats, prevA);
  CHECK(A(0, 0) == 1.0);
  CHECK(A(0, 1) == 0.0);
  CHECK(A.row(1) == prevA.row(1));
  const Matrix P = update_mixture(stats, Matrix::Constant(2, 1, 1.0));
  CHECK(P(1, 0) == 1.0);
  const Vector q = update_initial(SufficientStatistics(2, 1), Vector::Constant(2, 0.5));
  CHECK(q == Vector::Constant(2, 0.5));
}

TEST_CASE("sufficient statistics merge equals sequential add") {
  std::mt19937_64 rng(5);
  SufficientStatistics all(2, 2), a(2, 2), b(2, 2);
  for (int r = 0; r < 6; ++r) {
    const auto p = random_tables(2, 2, 3, rng);
    all.add(p);
    (r < 3 ? a : b).add(p);
  }
  a.merge(b);
  CHECK(a.sequences() == all.sequences());
  CHECK((a.transition_mass() - all.transition_mass()).cwiseAbs().maxCoeff() < 1e-15);
  CHECK((a.mixture_mass() - all.mixture_mass()).cwiseAbs().maxCoeff() < 1e-15);
}

}  // TEST_SUITE
