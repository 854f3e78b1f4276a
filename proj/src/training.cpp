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

#include "genhmm/training.hpp"

#include <cmath>
#include <string>

#include "genhmm/errors.hpp"
#include "genhmm/logging.hpp"

namespace genhmm {

void TrainConfig::validate() const {
  if (!(adam.learning_rate > 0.0)) throw ConfigError("learning rate must be > 0");
  if (batch_size < 0) throw ConfigError("batch size must be >= 0");
  if (inner_batches < 1) throw ConfigError("inner batches per EM step must be >= 1");
  if (max_iterations < 0) throw ConfigError("max EM iterations must be >= 0");
  if (!(tolerance > 0.0)) throw ConfigError("convergence tolerance must be > 0");
  if (threads < 1) throw ConfigError("thread count must be >= 1");
  if (!(monotonic_slack >= 0.0)) throw ConfigError("monotonicity slack must be >= 0");
}

void record_iteration(TrainState& state, double loglik, const char* model_name) {
  const int iteration = state.iteration;
  if (!std::isfinite(loglik))
    throw NumericalError(std::string(model_name) + " EM iteration " + std::to_string(iteration) +
                         ": non-finite average log-likelihood");
  const double previous = state.previous_loglik();
  state.history.push_back(loglik);
  ++state.iteration;
  if (std::isfinite(previous)) {
    if (loglik < previous - state.config.monotonic_slack) {
      ++state.monotonicity_violations;
      log_warning(std::string(model_name) + " EM iteration " + std::to_string(iteration) +
                  ": average log-likelihood decreased from " + std::to_string(previous) + " to " +
                  std::to_string(loglik));
    }
    const double denom = std::abs(loglik) > 0.0 ? std::abs(loglik) : 1.0;
    if (std::abs(loglik - previous) / denom < state.config.tolerance) state.converged = true;
  }
}

}  // namespace genhmm
