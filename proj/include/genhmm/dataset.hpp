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
#include <iosfwd>
#include <string>
#include <vector>

#include "genhmm/types.hpp"

namespace genhmm::data {

struct LabeledSequence {
  int label = 0;  // index into SequenceDataset::classes
  Frames frames;
};

// Labeled variable-length sequences sharing one frame dimension.
class SequenceDataset {
 public:
  SequenceDataset() = default;
  explicit SequenceDataset(int dim) : dim_(dim) {}

  // Appends a sequence, registering `label` on first use. Throws DataError
  // on empty, non-finite or wrongly-sized frames.
  void add(const std::string& label, Frames frames);

  int dim() const { return dim_; }
  std::size_t size() const { return items_.size(); }
  bool empty() const { return items_.empty(); }

  const std::vector<std::string>& classes() const { return classes_; }
  // -1 when unknown.
  int class_index(const std::string& label) const;
  const std::vector<LabeledSequence>& items() const { return items_; }

  // Frames of every sequence labeled `label`, in dataset order.
  std::vector<Frames> sequences_of(int label) const;
  double mean_length(int label) const;

 private:
  int dim_ = 0;
  std::vector<std::string> classes_;
  std::vector<LabeledSequence> items_;
};

// Line format: <label>\t<T>\t<N>\t<T*N values, row-major, space separated>.
// Files ending in ".gz" are gzip-compressed; reading also accepts gzip
// content regardless of the name.
SequenceDataset read_dataset(std::istream& in, const std::string& source = "<stream>");
void write_dataset(const SequenceDataset& ds, std::ostream& out);
SequenceDataset load_dataset(const std::string& path);
void save_dataset(const SequenceDataset& ds, const std::string& path);

// Per-dimension affine normalization fitted on a training split.
struct Standardizer {
  static constexpr double kStdFloor = 1e-8;

  Vector mean;
  Vector stddev;  // entries >= kStdFloor

  static Standardizer fit(const SequenceDataset& ds);
  SequenceDataset apply(const SequenceDataset& ds) const;
  SequenceDataset invert(const SequenceDataset& ds) const;
};

enum class NoiseKind { kWhite, kPink };

struct NoiseReport {
  int perturbed = 0;
  int zero_power = 0;  // left unmodified
};

// Adds noise to every sequence so that 10 log10(P_signal / P_noise) equals
// `snr_db` over that sequence, powers being mean squares over all entries.
// White noise is i.i.d. Gaussian; pink noise has a 1/f power spectrum along
// time for each coordinate. snr_db = +inf returns the dataset unchanged.
SequenceDataset add_noise(const SequenceDataset& ds, NoiseKind kind, double snr_db,
                          std::uint64_t seed, NoiseReport* report = nullptr);

// 10 log10(P(clean) / P(noisy - clean)).
double measured_snr_db(const Frames& clean, const Frames& noisy);

}  // namespace genhmm::data
