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

#include <optional>
#include <string>
#include <variant>

#include "genhmm/genhmm_model.hpp"
#include "genhmm/gmm_hmm.hpp"
#include "genhmm/training.hpp"

namespace genhmm::io {

inline constexpr const char* kCheckpointFormat = "genhmm-checkpoint";
inline constexpr int kCheckpointVersion = 1;

using AnyModel = std::variant<GenHmmModel, baseline::GmmHmmModel>;

struct Checkpoint {
  AnyModel model;
  // Present when the file was written mid-training; enables exact resume.
  std::optional<TrainState> train_state;
};

std::string checkpoint_to_string(const Checkpoint& checkpoint);
Checkpoint checkpoint_from_string(const std::string& text, const std::string& source = "<memory>");

// Writes to a sibling temporary file and renames it into place.
void save_checkpoint(const std::string& path, const Checkpoint& checkpoint);
Checkpoint load_checkpoint(const std::string& path);

// Atomic text write used for checkpoints and reports.
void write_file_atomic(const std::string& path, const std::string& contents);
std::string read_file(const std::string& path);

}  // namespace genhmm::io
