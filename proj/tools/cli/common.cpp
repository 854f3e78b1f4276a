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

#include "common.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace genhmm_cli {

int exit_code_for(genhmm_status status) {
  switch (status) {
    case GENHMM_OK:
      return kExitOk;
    case GENHMM_ERR_INVALID_ARGUMENT:
    case GENHMM_ERR_CONFIG:
      return kExitConfig;
    case GENHMM_ERR_DATA:
    case GENHMM_ERR_IO:
    case GENHMM_ERR_SHAPE:
      return kExitData;
    case GENHMM_ERR_NUMERICAL:
      return kExitNumerical;
    default:
      return kExitFailure;
  }
}

void check(genhmm_status status, const std::string& context) {
  if (status == GENHMM_OK) return;
  const char* detail = genhmm_last_error();
  std::string what = context;
  if (detail && *detail) what += ": " + std::string(detail);
  throw CliError(status, what);
}

void config_error(const std::string& what) { throw CliError(GENHMM_ERR_CONFIG, what); }
void data_error(const std::string& what) { throw CliError(GENHMM_ERR_DATA, what); }

Dataset load_dataset(const std::string& path) {
  genhmm_dataset* ds = nullptr;
  check(genhmm_dataset_load(path.c_str(), &ds), "loading " + path);
  return Dataset(ds);
}

Dataset filter_class(const genhmm_dataset* ds, int class_index) {
  genhmm_dataset* out = nullptr;
  check(genhmm_dataset_filter_class(ds, class_index, &out), "selecting class");
  return Dataset(out);
}

Model load_model(const std::string& path) {
  genhmm_model* m = nullptr;
  check(genhmm_model_load(path.c_str(), &m), "loading " + path);
  return Model(m);
}

std::uint64_t fnv1a(const std::string& text, std::uint64_t hash) {
  for (unsigned char c : text) {
    hash ^= c;
    hash *= 1099511628211ull;
  }
  return hash;
}

std::uint64_t class_seed(std::uint64_t root, const std::string& label) {
  return fnv1a(label, fnv1a(std::to_string(root) + ":"));
}

std::string file_stem(const std::string& label) {
  std::string out;
  for (char c : label) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
                    c == '-' || c == '_' || c == '.';
    out += ok ? c : '_';
  }
  if (out.empty() || out[0] == '.') out = "_" + out;
  return out;
}

void write_atomic(const std::string& path, const std::string& contents) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw CliError(GENHMM_ERR_IO, "cannot write " + tmp);
    out << contents;
    out.flush();
    if (!out) throw CliError(GENHMM_ERR_IO, "cannot write " + tmp);
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::remove(tmp.c_str());
    throw CliError(GENHMM_ERR_IO, "cannot rename " + tmp + " to " + path + ": " + ec.message());
  }
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CliError(GENHMM_ERR_IO, "cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(text);
  while (std::getline(in, item, ',')) {
    const auto b = item.find_first_not_of(" \t");
    const auto e = item.find_last_not_of(" \t");
    if (b == std::string::npos) config_error("empty entry in list '" + text + "'");
    out.push_back(item.substr(b, e - b + 1));
  }
  if (out.empty()) config_error("empty list");
  return out;
}

std::string format_real(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

}  // namespace genhmm_cli
