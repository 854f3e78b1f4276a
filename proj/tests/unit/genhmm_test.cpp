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

#include "genhmm/errors.hpp"
#include "genhmm/genhmm_model.hpp"
#include "genhmm/numeric.hpp"
#include "genhmm/synthetic.hpp"
#include "oracles.hpp"

using namespace genhmm;

namespace {

std::vector<Frames> toy_data(int count, int dim, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<Frames> out;
  std::uniform_int_distribution<int> len(3, 7);
  for (int i = 0; i < count; ++i) {
    Frames f = testing::random_frames(len(rng), dim, rng, 0.7);
    for (int t = 0; t < f.rows(); ++t) f.row(t).array() += 0.5 * t;
    out.push_back(f);
  }
  return out;
}

}  // namespace

TEST_SUITE("genhmm") {

TEST_CASE("state-count heuristic") {
  CHECK(heuristic_state_count(5.0) == 3);
  CHECK(heuristic_state_count(12.0) == 4);
  CHECK(heuristic_state_count(13.5) == 5);
  CHECK(heuristic_state_count(40.0) == 5);
  CHECK(heuristic_state_count(1.0) == 3);
  CHECK(heuristic_state_count(8.0, 2) == 4);
  CHECK_THROWS_AS(heuristic_state_count(8.0, 0), ConfigError);
}

TEST_CASE("initialization") {
  std::mt19937_64 rng(3);
  flow::FlowConfig cfg;
  cfg.dim = 3;
  const GenHmmModel m = GenHmmModel::initialize("x", 4, 2, cfg, rng);
  CHECK(m.num_states() == 4);
  CHECK(m.num_components() == 2);
  CHECK(m.generators.size() == 8);
  CHECK(m.dim() == 3);
  CHECK(m.generator(0, 0).block_count() == 4);
  CHECK(m.mixture.weights.isApproxToConstant(0.5));
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < i; ++j) CHECK(m.core.transition(i, j) == 0.0);
  CHECK_NOTHROW(m.validate());
}

TEST_CASE("frame table uses each generator's likelihood") {
  std::mt19937_64 rng(4);
  const GenHmmModel m = testing::random_genhmm(3, 2, 4, 2, 8, rng);
  const Frames seq = testing::random_frames(6, 4, rng);
  const hmm::FrameLogLik ll = frame_loglik_table(m, seq);
  for (int t = 0; t < 6; ++t)
    for (int s = 0; s < 3; ++s)
      for (int k = 0; k < 2; ++k)
        CHECK(ll.component(t, s * 2 + k) ==
              doctest::Approx(flow::flow_loglik(m.generator(s, k), seq.row(t).transpose())).epsilon(1e-13));
  CHECK_THROWS_AS(frame_loglik_table(m, testing::random_frames(2, 3, rng)), ShapeError);
}

TEST_CASE("sequence likelihood equals enumeration") {
  std::mt19937_64 rng(5);
  const GenHmmModel m = testing::random_genhmm(2, 2, 2, 1, 6, rng);
  const Frames seq = testing::random_frames(4, 2, rng);
  const auto ll = frame_loglik_table(m, seq);
  const auto e = testing::enumerate_posteriors(m.core.initial, m.core.transition, m.mixture.weights, ll.component);
  CHECK(std::abs(sequence_loglik(m, seq).loglik - e.loglik) < 1e-10);
}

TEST_CASE("E-pass is identical across thread counts") {
  std::mt19937_64 rng(6);
  const GenHmmModel m = testing::random_genhmm(3, 2, 3, 1, 8, rng);
  const auto data = toy_data(11, 3, 1);
  const EStepResult a = expectation(m, data, 1);
  const EStepResult b = expectation(m, data, 3);
  CHECK(a.total_loglik == b.total_loglik);
  CHECK(a.frames == b.frames);
  CHECK(a.stats.transition_mass() == b.stats.transition_mass());
  for (std::size_t r = 0; r < data.size(); ++r) CHECK(a.posteriors[r].gamma == b.posteriors[r].gamma);
}

TEST_CASE("generator gradient matches finite differences of the objective") {
  std::mt19937_64 rng(7);
  GenHmmModel m = testing::random_genhmm(2, 2, 2, 1, 4, rng);
  const auto data = toy_data(3, 2, 2);
  const EStepResult pass = expectation(m, data);
  std::vector<std::size_t> all{0, 1, 2};
  std::vector<flow::FlowTapes> tapes;
  for (const auto& g : m.generators) tapes.emplace_back(g);
  CHECK(generator_gradient(m, data, pass.posteriors, all, tapes) == 0);
  auto objective = [&] { return generator_objective(m, data, pass.posteriors); };
  const double frames = static_cast<double>(pass.frames);
  int checked = 0;
  for (std::size_t g = 0; g < m.generators.size(); g += 3) {
    auto& net = m.generators[g].layers()[1].shift_net;
    auto& w = net.layers()[0].weight;
    for (Eigen::Index i = 0; i < w.size(); ++i) {
      const double fd = testing::five_point_derivative(w.data()[i], objective, 1e-3);
      CHECK(tapes[g].shift[1].weight[0].data()[i] / frames == doctest::Approx(fd).epsilon(1e-6).scale(1e-4));
      ++checked;
    }
  }
  CHECK(checked > 0);
}

TEST_CASE("EM improves the likelihood and records history") {
  std::mt19937_64 rng(8);
  flow::FlowConfig cfg;
  cfg.dim = 2;
  cfg.blocks = 1;
  cfg.hidden_width = 8;
  GenHmmModel m = GenHmmModel::initialize("toy", 3, 2, cfg, rng);
  const auto data = toy_data(12, 2, 3);
  TrainConfig tc;
  tc.adam.learning_rate = 5e-3;
  tc.max_iterations = 5;
  tc.tolerance = 1e-12;
  TrainState st = make_train_state(m, tc);
  int calls = 0;
  train(m, data, st, [&](const GenHmmModel&, const TrainState& s) {
    ++calls;
    CHECK(s.history.size() == static_cast<std::size_t>(s.iteration));
    return true;
  });
  CHECK(calls == 5);
  CHECK(st.iteration == 5);
  CHECK(st.history.size() == 5);
  CHECK(st.history.back() > st.initial_loglik);
  CHECK(st.monotonicity_violations == 0);
  CHECK_NOTHROW(m.validate());
}

TEST_CASE("callback can stop training and tolerance converges") {
  std::mt19937_64 rng(9);
  flow::FlowConfig cfg;
  cfg.dim = 2;
  cfg.blocks = 1;
  cfg.hidden_width = 4;
  GenHmmModel m = GenHmmModel::initialize("toy", 3, 1, cfg, rng);
  const auto data = toy_data(5, 2, 4);
  TrainConfig tc;
  tc.max_iterations = 10;
  TrainState st = make_train_state(m, tc);
  train(m, data, st, [](const GenHmmModel&, const TrainState& s) { return s.iteration < 2; });
  CHECK(st.iteration == 2);
  tc.tolerance = 1.0;
  TrainState loose = make_train_state(m, tc);
  train(m, data, loose);
  CHECK(loose.converged);
  CHECK(loose.iteration == 1);
}

TEST_CASE("invalid training configuration") {
  TrainConfig tc;
  tc.inner_batches = 0;
  CHECK_THROWS_AS(tc.validate(), ConfigError);
  tc = TrainConfig{};
  tc.adam.learning_rate = -1.0;
  CHECK_THROWS_AS(tc.validate(), ConfigError);
}

TEST_CASE("fingerprint tracks parameters") {
  std::mt19937_64 rng(10);
  GenHmmModel m = testing::random_genhmm(2, 1, 2, 1, 4, rng);
  const auto before = m.fingerprint();
  m.generators[1].layers()[0].shift_net.layers()[0].bias(0) += 1e-12;
  CHECK(m.fingerprint() != before);
}

TEST_CASE("argmax and classification") {
  const std::vector<double> tie{-3.0, -1.0, -1.0};
  CHECK(argmax_class(tie) == 1);
  const std::vector<double> none{-INFINITY, -INFINITY};
  CHECK(argmax_class(none) == -1);
  const std::vector<double> nan_first{std::nan(""), -5.0};
  CHECK(argmax_class(nan_first) == 1);

  std::mt19937_64 rng(11);
  std::vector<GenHmmModel> models{testing::random_genhmm(2, 1, 2, 1, 4, rng),
                                  testing::random_genhmm(2, 1, 2, 1, 4, rng)};
  const Frames seq = testing::random_frames(5, 2, rng);
  const Classification raw = classify(models, seq);
  const Classification per = classify(models, seq, true);
  for (int i = 0; i < 2; ++i) {
    CHECK(raw.scores[i] == sequence_loglik(models[i], seq).loglik);
    CHECK(per.scores[i] == doctest::Approx(raw.scores[i] / 5.0));
  }
  CHECK(raw.index == per.index);
}

}  // TEST_SUITE
