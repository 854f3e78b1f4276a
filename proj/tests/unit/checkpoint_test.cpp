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
#include <filesystem>
#include <random>

#include <json.hpp>

#include "genhmm/checkpoint.hpp"
#include "genhmm/errors.hpp"
#include "oracles.hpp"

using namespace genhmm;
using namespace genhmm::io;

namespace {

std::vector<Frames> data_for(int dim, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return {testing::random_frames(6, dim, rng), testing::random_frames(4, dim, rng)};
}

}  // namespace

TEST_SUITE("checkpoint") {

TEST_CASE("GenHMM round trip is bit-exact") {
  std::mt19937_64 rng(1);
  GenHmmModel m = testing::random_genhmm(3, 2, 3, 2, 6, rng);
  m.label = "label with spaces";
  const std::string text = checkpoint_to_string(Checkpoint{m, std::nullopt});
  const Checkpoint back = checkpoint_from_string(text, "mem");
  REQUIRE(std::holds_alternative<GenHmmModel>(back.model));
  const auto& m2 = std::get<GenHmmModel>(back.model);
  CHECK(m2.label == m.label);
  CHECK(m2.fingerprint() == m.fingerprint());
  CHECK_FALSE(back.train_state.has_value());
  CHECK(checkpoint_to_string(back) == text);
  for (const auto& seq : data_for(3, 2)) CHECK(sequence_loglik(m2, seq).loglik == sequence_loglik(m, seq).loglik);
}

TEST_CASE("GMM-HMM round trip with train state") {
  const auto data = data_for(2, 3);
  std::mt19937_64 rng(4);
  baseline::GmmHmmModel m = baseline::GmmHmmModel::initialize("g", 3, 2, data, rng);
  TrainConfig tc;
  tc.max_iterations = 2;
  TrainState st = baseline::make_train_state(m, tc);
  baseline::train(m, data, st);
  const std::string text = checkpoint_to_string(Checkpoint{m, st});
  const Checkpoint back = checkpoint_from_string(text, "mem");
  const auto& m2 = std::get<baseline::GmmHmmModel>(back.model);
  CHECK(m2.fingerprint() == m.fingerprint());
  REQUIRE(back.train_state.has_value());
  CHECK(back.train_state->history == st.history);
  CHECK(back.train_state->iteration == 2);
  CHECK(back.train_state->initial_loglik == st.initial_loglik);
  CHECK(checkpoint_to_string(back) == text);
}

TEST_CASE("optimizer state survives and non-finite values are encoded") {
  std::mt19937_64 rng(5);
  flow::FlowConfig cfg;
  cfg.dim = 2;
  cfg.blocks = 1;
  cfg.hidden_width = 4;
  GenHmmModel m = GenHmmModel::initialize("f", 3, 1, cfg, rng);
  TrainConfig tc;
  tc.max_iterations = 1;
  TrainState st = make_train_state(m, tc);
  const std::string fresh = checkpoint_to_string(Checkpoint{m, st});
  CHECK(nlohmann::json::parse(fresh)["train_state"]["initial_loglik"] == "nan");
  train(m, data_for(2, 6), st);
  const Checkpoint back = checkpoint_from_string(checkpoint_to_string(Checkpoint{m, st}), "mem");
  const auto& opt = back.train_state->optimizers;
  REQUIRE(opt.size() == st.optimizers.size());
  CHECK(opt[0].scale[0].step == st.optimizers[0].scale[0].step);
  CHECK(opt[0].scale[0].second_weight[1] == st.optimizers[0].scale[0].second_weight[1]);
  CHECK(opt[1].shift[1].first_bias[2] == st.optimizers[1].shift[1].first_bias[2]);
}

TEST_CASE("malformed documents are data errors") {
  std::mt19937_64 rng(6);
  const GenHmmModel m = testing::random_genhmm(2, 1, 2, 1, 4, rng);
  const auto good = nlohmann::json::parse(checkpoint_to_string(Checkpoint{m, std::nullopt}));
  auto broken = [&](auto edit) {
    nlohmann::json j = good;
    edit(j);
    return j.dump();
  };
  CHECK_THROWS_AS(checkpoint_from_string("{not json", "mem"), DataError);
  CHECK_THROWS_AS(checkpoint_from_string(broken([](auto& j) { j["version"] = 99; }), "mem"), DataError);
  CHECK_THROWS_AS(checkpoint_from_string(broken([](auto& j) { j["format"] = "other"; }), "mem"), DataError);
  CHECK_THROWS_AS(checkpoint_from_string(broken([](auto& j) { j.erase("transition"); }), "mem"), DataError);
  CHECK_THROWS_AS(checkpoint_from_string(broken([](auto& j) { j["initial"]["data"][0] = 0.9; }), "mem"), DataError);
  CHECK_THROWS_AS(checkpoint_from_string(broken([](auto& j) { j["model_type"] = "hmm"; }), "mem"), DataError);
  try {
    checkpoint_from_string("[]", "some/file.json");
    FAIL("expected an error");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("some/file.json") != std::string::npos);
  }
}

TEST_CASE("atomic save leaves no temporary file") {
  std::mt19937_64 rng(7);
  const GenHmmModel m = testing::random_genhmm(2, 1, 2, 1, 4, rng);
  const auto dir = std::filesystem::temp_directory_path() / "genhmm_ckpt_test";
  std::filesystem::create_directories(dir);
  const std::string path = (dir / "m.json").string();
  save_checkpoint(path, Checkpoint{m, std::nullopt});
  save_checkpoint(path, Checkpoint{m, std::nullopt});
  CHECK_FALSE(std::filesystem::exists(path + ".tmp"));
  CHECK(std::get<GenHmmModel>(load_checkpoint(path).model).fingerprint() == m.fingerprint());
  CHECK_THROWS_AS(load_checkpoint((dir / "missing.json").string()), IoError);
  std::filesystem::remove_all(dir);
}

}  // TEST_SUITE
