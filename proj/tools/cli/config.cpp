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

#include "config.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <sstream>

#include "common.hpp"

namespace genhmm_cli {

void RunConfig::validate() const {
  if (model != "genhmm" && model != "gmmhmm") config_error("unknown model type '" + model + "'");
  auto positive = [](const char* name, double v) {
    if (!(v > 0)) config_error(std::string(name) + " must be positive");
  };
  positive("k", k);
  positive("blocks", blocks);
  positive("hidden", hidden);
  positive("frames-per-state", frames_per_state);
  positive("lr", lr);
  positive("inner-batches", inner_batches);
  positive("max-em", max_em);
  positive("tol", tol);
  positive("threads", threads);
  if (states < 0) config_error("states must be >= 0");
  if (batch_size < 0) config_error("batch-size must be >= 0");
}

genhmm_model_type RunConfig::model_type() const {
  return model == "gmmhmm" ? GENHMM_MODEL_GMM : GENHMM_MODEL_FLOW;
}

genhmm_train_config RunConfig::train_config() const {
  genhmm_train_config c = genhmm_train_config_default();
  c.model_type = model_type();
  c.num_components = k;
  c.flow_blocks = blocks;
  c.hidden_width = hidden;
  c.frames_per_state = frames_per_state;
  c.num_states = states;
  c.learning_rate = lr;
  c.batch_size = batch_size;
  c.inner_batches = inner_batches;
  c.max_iterations = max_em;
  c.tolerance = tol;
  c.seed = seed;
  c.threads = threads;
  return c;
}

std::map<std::string, std::string> RunConfig::fields() const {
  return {
      {"model", model},
      {"k", std::to_string(k)},
      {"blocks", std::to_string(blocks)},
      {"hidden", std::to_string(hidden)},
      {"frames-per-state", std::to_string(frames_per_state)},
      {"states", std::to_string(states)},
      {"lr", format_real(lr)},
      {"batch-size", std::to_string(batch_size)},
      {"inner-batches", std::to_string(inner_batches)},
      {"max-em", std::to_string(max_em)},
      {"tol", format_real(tol)},
      {"seed", std::to_string(seed)},
      {"threads", std::to_string(threads)},
  };
}

std::string RunConfig::to_text() const {
  std::ostringstream out;
  for (const auto& [key, value] : fields()) out << key << " = " << value << "\n";
  return out.str();
}

std::uint64_t RunConfig::hash() const {
  // threads do not change results in single-threaded reproduction
  auto f = fields();
  f.erase("threads");
  std::string text;
  for (const auto& [key, value] : f) text += key + "=" + value + "\n";
  return fnv1a(text);
}

void add_run_options(CLI::App& app, RunConfig& c) {
  app.add_option("--model", c.model, "Model type")
      ->check(CLI::IsMember({"genhmm", "gmmhmm"}))
      ->capture_default_str();
  app.add_option("--k", c.k, "Mixture components per state")->capture_default_str();
  app.add_option("--blocks", c.blocks, "Flow blocks per generator")->capture_default_str();
  app.add_option("--hidden", c.hidden, "Hidden width of coupling networks")->capture_default_str();
  app.add_option("--frames-per-state", c.frames_per_state, "State-count heuristic divisor")
      ->capture_default_str();
  app.add_option("--states", c.states, "Fixed state count (0: heuristic)")->capture_default_str();
  app.add_option("--lr", c.lr, "Adam learning rate")->capture_default_str();
  app.add_option("--batch-size", c.batch_size, "Sequences per gradient batch (0: all)")
      ->capture_default_str();
  app.add_option("--inner-batches", c.inner_batches, "Gradient batches per EM iteration")
      ->capture_default_str();
  app.add_option("--max-em", c.max_em, "Maximum EM iterations")->capture_default_str();
  app.add_option("--tol", c.tol, "Relative log-likelihood convergence tolerance")
      ->capture_default_str();
  app.add_option("--seed", c.seed, "Root seed")->capture_default_str();
  app.add_option("--threads", c.threads, "Worker threads per model")->capture_default_str();
}

void apply_config_file(CLI::App& app, const std::string& path) {
  std::vector<CLI::ConfigItem> items;
  try {
    items = CLI::ConfigINI().from_file(path);
  } catch (const CLI::Error& e) {
    config_error("cannot read config file " + path + ": " + e.what());
  }
  for (const auto& item : items) {
    if (!item.parents.empty() && !(item.parents.size() == 1 && item.parents[0] == "default")) {
      config_error(path + ": sections are not supported ('" + item.fullname() + "')");
    }
    std::string name = item.name;
    std::replace(name.begin(), name.end(), '_', '-');
    CLI::Option* opt = app.get_option_no_throw("--" + name);
    if (opt == nullptr || name == "config") config_error(path + ": unknown key '" + item.name + "'");
    if (opt->count() > 0) continue;  // command line wins
    try {
      opt->add_result(item.inputs);
      opt->run_callback();
    } catch (const CLI::Error& e) {
      config_error(path + ": invalid value for '" + item.name + "': " + e.what());
    }
  }
}

}  // namespace genhmm_cli
