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
#include <map>
#include <string>

#include "genhmm/genhmm.h"

namespace CLI {
class App;
}

namespace genhmm_cli {

struct RunConfig {
  std::string model = "genhmm";
  int k = 3;
  int blocks = 4;
  int hidden = 24;
  int frames_per_state = 3;
  int states = 0;  // 0: heuristic
  double lr = 1e-3;
  int batch_size = 0;
  int inner_batches = 10;
  int max_em = 50;
  double tol = 1e-4;
  std::uint64_t seed = 0;
  int threads = 1;

  // Throws a config CliError on invalid values.
  void validate() const;
  genhmm_model_type model_type() const;
  genhmm_train_config train_config() const;
  // Canonical key=value lines, one per field, in a fixed order.
  std::map<std::string, std::string> fields() const;
  std::string to_text() const;
  std::uint64_t hash() const;
};

// Registers the RunConfig flags on `app`.
void add_run_options(CLI::App& app, RunConfig& config);

// Fills options of `app` that were not given on the command line from a
// key = value file. Unknown keys are a config error.
void apply_config_file(CLI::App& app, const std::string& path);

}  // namespace genhmm_cli
