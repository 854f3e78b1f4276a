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
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "genhmm/genhmm.h"

namespace genhmm_cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitFailure = 1,
  kExitConfig = 2,
  kExitData = 3,
  kExitNumerical = 4,
};

// Failure carrying the library status it came from.
class CliError : public std::runtime_error {
 public:
  CliError(genhmm_status status, const std::string& what) : std::runtime_error(what), status_(status) {}
  genhmm_status status() const { return status_; }

 private:
  genhmm_status status_;
};

int exit_code_for(genhmm_status status);

// Throws CliError with the library's message when `status` is not OK.
void check(genhmm_status status, const std::string& context);

[[noreturn]] void config_error(const std::string& what);
[[noreturn]] void data_error(const std::string& what);

struct DatasetDeleter {
  void operator()(genhmm_dataset* ds) const { genhmm_dataset_free(ds); }
};
struct ModelDeleter {
  void operator()(genhmm_model* m) const { genhmm_model_free(m); }
};
using Dataset = std::unique_ptr<genhmm_dataset, DatasetDeleter>;
using Model = std::unique_ptr<genhmm_model, ModelDeleter>;

Dataset load_dataset(const std::string& path);
Dataset filter_class(const genhmm_dataset* ds, int class_index);
Model load_model(const std::string& path);

std::uint64_t fnv1a(const std::string& text, std::uint64_t hash = 14695981039346656037ull);
// Per-class training seed: stable in the root seed and the label text.
std::uint64_t class_seed(std::uint64_t root, const std::string& label);

// Label rendered safe for use in a file name.
std::string file_stem(const std::string& label);

void write_atomic(const std::string& path, const std::string& contents);
std::string read_text(const std::string& path);

// "1,3,5" -> {"1","3","5"}; empty fields rejected.
std::vector<std::string> split_list(const std::string& text);

std::string format_real(double v);

}  // namespace genhmm_cli
