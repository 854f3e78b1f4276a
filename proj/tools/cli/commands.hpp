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
#include <limits>
#include <string>
#include <vector>

#include "config.hpp"

namespace genhmm_cli {

struct TrainOptions {
  RunConfig config;
  std::string data;
  std::string out;
  bool resume = false;
  bool standardize = false;
  int jobs = 1;  // classes trained concurrently
  bool quiet = false;
};

struct EvalOptions {
  std::string models;  // directory written by train
  std::string data;
  std::string out;     // report path; empty: stdout only
  std::string noise;   // "", "white" or "pink"
  double snr_db = std::numeric_limits<double>::quiet_NaN();
  std::uint64_t seed = 0;
  bool per_frame = false;
  int threads = 1;
  bool quiet = false;
};

struct BenchOptions {
  RunConfig config;
  std::string data;       // training set; empty with a synthetic preset
  std::string test;       // test set
  std::string synthetic;  // "", "separated", "warped" or "multimodal"
  std::uint64_t data_seed = 0;
  int classes = 0;  // synthetic overrides; 0 keeps the preset default
  int train_per_class = 0;
  int test_per_class = 0;
  std::string models = "genhmm,gmmhmm";
  std::string ks = "1,3";
  std::string snrs = "clean";
  std::string noise = "white";
  std::string out;
  bool standardize = false;
  bool per_frame = false;
  int jobs = 1;
  bool quiet = false;
};

struct SynthOptions {
  std::string preset = "separated";
  int classes = 0;  // 0 keeps the preset default
  int dim = 0;
  int train_per_class = 0;
  int test_per_class = 0;
  std::uint64_t seed = 0;
  std::string train_out;
  std::string test_out;
};

int cmd_train(const TrainOptions& options);
int cmd_eval(const EvalOptions& options);
int cmd_bench(const BenchOptions& options);
int cmd_synth(const SynthOptions& options);

}  // namespace genhmm_cli
