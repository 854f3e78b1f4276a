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

#include <cmath>
#include <random>

#include "genhmm/gmm_hmm.hpp"
#include "genhmm/numeric.hpp"
#include "oracles.hpp"

using namespace genhmm;
using namespace genhmm::baseline;

namespace {

std::vector<Frames> two_mode_data(int count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 0.3);
  std::vector<Frames> out;
  for (int r = 0; r < count; ++r) {
    Frames f(6, 2);
    for (int t = 0; t < 6; ++t) {
      const double c = t < 3 ? -2.0 : 2.0;
      f(t, 0) = c + n(rng);
      f(t, 1) = -c + n(rng);
    }
    out.push_back(f);
  }
  return out;
}

}  // namespace

TEST_SUITE("gmm") {

TEST_CASE("diagonal gaussian density") {
  Vector mean(2), var(2), x(2);
  mean << 1.0, -1.0;
  var << 0.5, 2.0;
  x << 0.3, 0.4;
  double expected = 0.0;
  for (int i = 0; i < 2; ++i)
    expected += -0.5 * std::log(2 * M_PI * var(i)) - 0.5 * (x(i) - mean(i)) * (x(i) - mean(i)) / var(i);
  CHECK(diagonal_gaussian_logpdf(mean, var, x) == doctest::Approx(expected).epsilon(1e-14));
}

TEST_CASE("single state single component update is the sample moments") {
  std::mt19937_64 rng(1);
  std::vector<Frames> data{testing::random_frames(5, 3, rng), testing::random_frames(7, 3, rng)};
  GmmHmmModel m = GmmHmmModel::initialize("one", 1, 1, data, rng);
  TrainState st = make_train_state(m, TrainConfig{});
  gmm_em_step(m, data, st);
  Vector mean = Vector::Zero(3), sq = Vector::Zero(3);
  for (const auto& f : data) {
    mean += f.colwise().sum().transpose();
    sq += f.array().square().colwise().sum().matrix().transpose();
  }
  mean /= 12.0;
  const Vector var = sq / 12.0 - mean.cwiseProduct(mean);
  CHECK((m.emission.means[0].row(0).transpose() - mean).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((m.emission.variances[0].row(0).transpose() - var).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("Baum-Welch is monotone and finds the modes") {
  const auto data = two_mode_data(20, 2);
  std::mt19937_64 rng(3);
  GmmHmmModel m = GmmHmmModel::initialize("two", 2, 1, data, rng);
  TrainConfig tc;
  tc.max_iterations = 20;
  tc.tolerance = 1e-12;
  TrainState st = make_train_state(m, tc);
  train(m, data, st);
  double prev = st.initial_loglik;
  for (double v : st.history) {
    CHECK(v >= prev - 1e-9);
    prev = v;
  }
  Matrix means(2, 2);
  means << m.emission.means[0].row(0), m.emission.means[1].row(0);
  const int lo = means(0, 0) < means(1, 0) ? 0 : 1;
  CHECK(means(lo, 0) == doctest::Approx(-2.0).epsilon(0.05));
  CHECK(means(1 - lo, 1) == doctest::Approx(-2.0).epsilon(0.05));
  CHECK_NOTHROW(m.validate());
}

TEST_CASE("variance floor") {
  std::vector<Frames> data;
  for (int r = 0; r < 3; ++r) data.push_back(Frames::Constant(4, 2, 1.5));
  std::mt19937_64 rng(4);
  GmmHmmModel m = GmmHmmModel::initialize("flat", 1, 2, data, rng);
  TrainState st = make_train_state(m, TrainConfig{});
  gmm_em_step(m, data, st);
  for (const auto& v : m.emission.variances) CHECK(v.minCoeff() >= kVarianceFloor);
  CHECK(std::isfinite(sequence_loglik(m, data[0]).loglik));
}

TEST_CASE("classification prefers the generating model") {
  const auto data = two_mode_data(10, 5);
  std::vector<Frames> flipped;
  for (const auto& f : data) flipped.push_back(-f);
  std::mt19937_64 rng(6);
  std::vector<GmmHmmModel> models{GmmHmmModel::initialize("a", 2, 1, data, rng),
                                  GmmHmmModel::initialize("b", 2, 1, flipped, rng)};
  for (auto* p : {&models[0], &models[1]}) {
    TrainConfig tc;
    tc.max_iterations = 10;
    TrainState st = make_train_state(*p, tc);
    train(*p, p == &models[0] ? data : flipped, st);
  }
  CHECK(classify(models, data[0]).index == 0);
  CHECK(classify(models, flipped[0]).index == 1);
}

}  // TEST_SUITE
