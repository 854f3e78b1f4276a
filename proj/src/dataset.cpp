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

#include "genhmm/dataset.hpp"

#include <zlib.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <memory>
#include <ostream>
#include <sstream>

#include "genhmm/errors.hpp"

namespace genhmm::data {
namespace {

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

template <typename T>
T parse_number(std::string_view token, const std::string& where) {
  T value{};
  const auto* end = token.data() + token.size();
  auto [ptr, ec] = std::from_chars(token.data(), end, value);
  if (ec != std::errc() || ptr != end) throw DataError(where + ": cannot parse '" + std::string(token) + "'");
  return value;
}

std::string format_double(double v) {
  char buf[40];
  const int n = std::snprintf(buf, sizeof buf, "%.17g", v);
  return std::string(buf, static_cast<std::size_t>(n));
}

std::string read_all(const std::string& path) {
  gzFile f = gzopen(path.c_str(), "rb");
  if (!f) throw IoError("cannot open " + path);
  std::string content;
  char buf[1 << 16];
  int n = 0;
  while ((n = gzread(f, buf, sizeof buf)) > 0) content.append(buf, static_cast<std::size_t>(n));
  int err = Z_OK;
  const char* msg = gzerror(f, &err);
  gzclose(f);
  if (n < 0 || (err != Z_OK && err != Z_STREAM_END)) throw IoError("read error in " + path + ": " + msg);
  return content;
}

}  // namespace

void SequenceDataset::add(const std::string& label, Frames frames) {
  if (label.empty() || label.find_first_of("\t\n") != std::string::npos)
    throw DataError("class labels must be non-empty and free of tabs/newlines");
  if (frames.rows() < 1) throw DataError("sequence for '" + label + "' has no frames");
  if (dim_ == 0) dim_ = static_cast<int>(frames.cols());
  if (frames.cols() != dim_)
    throw DataError("sequence for '" + label + "' has frame width " + std::to_string(frames.cols()) +
                    ", dataset uses " + std::to_string(dim_));
  if (dim_ < 1) throw DataError("frame dimension must be positive");
  if (!frames.allFinite()) throw DataError("sequence for '" + label + "' has non-finite values");
  int idx = class_index(label);
  if (idx < 0) {
    idx = static_cast<int>(classes_.size());
    classes_.push_back(label);
  }
  items_.push_back({idx, std::move(frames)});
}

int SequenceDataset::class_index(const std::string& label) const {
  const auto it = std::find(classes_.begin(), classes_.end(), label);
  return it == classes_.end() ? -1 : static_cast<int>(it - classes_.begin());
}

std::vector<Frames> SequenceDataset::sequences_of(int label) const {
  std::vector<Frames> out;
  for (const auto& item : items_)
    if (item.label == label) out.push_back(item.frames);
  return out;
}

double SequenceDataset::mean_length(int label) const {
  double total = 0.0;
  int count = 0;
  for (const auto& item : items_)
    if (item.label == label) {
      total += static_cast<double>(item.frames.rows());
      ++count;
    }
  return count > 0 ? total / count : 0.0;
}

SequenceDataset read_dataset(std::istream& in, const std::string& source) {
  SequenceDataset ds;
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::string where = source + ":" + std::to_string(line_no);
    std::vector<std::string_view> fields;
    std::string_view rest(line);
    for (int i = 0; i < 3; ++i) {
      const auto tab = rest.find('\t');
      if (tab == std::string_view::npos) throw DataError(where + ": expected 4 tab-separated fields");
      fields.push_back(rest.substr(0, tab));
      rest.remove_prefix(tab + 1);
    }
    const std::string label(fields[0]);
    const long T = parse_number<long>(fields[1], where);
    const long N = parse_number<long>(fields[2], where);
    if (T < 1 || N < 1) throw DataError(where + ": T and N must be positive");
    if (ds.dim() != 0 && N != ds.dim())
      throw DataError(where + ": frame dimension " + std::to_string(N) + " differs from " +
                      std::to_string(ds.dim()));
    Frames frames(T, N);
    long filled = 0;
    std::size_t pos = 0;
    while (pos < rest.size()) {
      while (pos < rest.size() && rest[pos] == ' ') ++pos;
      if (pos >= rest.size()) break;
      std::size_t end = rest.find(' ', pos);
      if (end == std::string_view::npos) end = rest.size();
      if (filled >= T * N) throw DataError(where + ": more than T*N values");
      const std::string_view token = rest.substr(pos, end - pos);
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
      if (ec != std::errc() || ptr != token.data() + token.size())
        throw DataError(where + ": cannot parse value '" + std::string(token) + "'");
      frames.data()[filled++] = v;
      pos = end;
    }
    if (filled != T * N)
      throw DataError(where + ": expected " + std::to_string(T * N) + " values, found " + std::to_string(filled));
    try {
      ds.add(label, std::move(frames));
    } catch (const DataError& e) {
      throw DataError(where + ": " + e.what());
    }
  }
  if (ds.empty()) throw DataError(source + ": dataset is empty");
  return ds;
}

void write_dataset(const SequenceDataset& ds, std::ostream& out) {
  for (const auto& item : ds.items()) {
    out << ds.classes()[static_cast<std::size_t>(item.label)] << '\t' << item.frames.rows() << '\t'
        << item.frames.cols() << '\t';
    for (Eigen::Index i = 0; i < item.frames.size(); ++i) {
      if (i > 0) out << ' ';
      out << format_double(item.frames.data()[i]);
    }
    out << '\n';
  }
}

SequenceDataset load_dataset(const std::string& path) {
  std::istringstream in(read_all(path));
  return read_dataset(in, path);
}

void save_dataset(const SequenceDataset& ds, const std::string& path) {
  std::ostringstream buf;
  write_dataset(ds, buf);
  const std::string text = buf.str();
  if (ends_with(path, ".gz")) {
    gzFile f = gzopen(path.c_str(), "wb");
    if (!f) throw IoError("cannot open " + path + " for writing");
    const int written = text.empty() ? 0 : gzwrite(f, text.data(), static_cast<unsigned>(text.size()));
    if (gzclose(f) != Z_OK || written != static_cast<int>(text.size())) throw IoError("write error in " + path);
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << text;
  if (!out) throw IoError("write error in " + path);
}

Standardizer Standardizer::fit(const SequenceDataset& ds) {
  if (ds.empty()) throw DataError("cannot fit a standardizer on an empty dataset");
  const int n = ds.dim();
  Vector sum = Vector::Zero(n);
  double count = 0.0;
  for (const auto& item : ds.items()) {
    sum += item.frames.colwise().sum().transpose();
    count += static_cast<double>(item.frames.rows());
  }
  Standardizer st;
  st.mean = sum / count;
  Vector sq = Vector::Zero(n);
  for (const auto& item : ds.items())
    sq += (item.frames.rowwise() - st.mean.transpose()).array().square().colwise().sum().matrix().transpose();
  st.stddev = (sq / count).cwiseSqrt().cwiseMax(kStdFloor);
  return st;
}

SequenceDataset Standardizer::apply(const SequenceDataset& ds) const {
  if (ds.dim() != mean.size()) throw ShapeError("standardizer dimension does not match the dataset");
  SequenceDataset out(ds.dim());
  for (const auto& item : ds.items()) {
    Frames f = (item.frames.rowwise() - mean.transpose()).array().rowwise() / stddev.transpose().array();
    out.add(ds.classes()[static_cast<std::size_t>(item.label)], std::move(f));
  }
  return out;
}

SequenceDataset Standardizer::invert(const SequenceDataset& ds) const {
  if (ds.dim() != mean.size()) throw ShapeError("standardizer dimension does not match the dataset");
  SequenceDataset out(ds.dim());
  for (const auto& item : ds.items()) {
    Frames f = (item.frames.array().rowwise() * stddev.transpose().array()).matrix().rowwise() + mean.transpose();
    out.add(ds.classes()[static_cast<std::size_t>(item.label)], std::move(f));
  }
  return out;
}

}  // namespace genhmm::data
