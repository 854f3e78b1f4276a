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

#include <fftw3.h>

#include <cmath>
#include <complex>
#include <limits>
#include <random>
#include <string>

#include "genhmm/dataset.hpp"
#include "genhmm/errors.hpp"
#include "genhmm/logging.hpp"
#include "genhmm/numeric.hpp"

namespace genhmm::data {
namespace {

double mean_square(const Frames& f) { return f.squaredNorm() / static_cast<double>(f.size()); }

// Gaussian white noise reshaped along time so that power falls as 1/f,
// i.e. amplitudes scaled by 1/sqrt(f). The DC bin is weighted like f = 1.
class PinkShaper {
 public:
  explicit PinkShaper(int length)
      : length_(length),
        time_(fftw_alloc_real(static_cast<std::size_t>(length))),
        freq_(fftw_alloc_complex(static_cast<std::size_t>(length / 2 + 1))) {
    forward_ = fftw_plan_dft_r2c_1d(length, time_, freq_, FFTW_ESTIMATE);
    inverse_ = fftw_plan_dft_c2r_1d(length, freq_, time_, FFTW_ESTIMATE);
  }
  ~PinkShaper() {
    fftw_destroy_plan(forward_);
    fftw_destroy_plan(inverse_);
    fftw_free(time_);
    fftw_free(freq_);
  }
  PinkShaper(const PinkShaper&) = delete;
  PinkShaper& operator=(const PinkShaper&) = delete;

  void shape(Eigen::Ref<Vector> column) {
    for (int t = 0; t < length_; ++t) time_[t] = column(t);
    fftw_execute(forward_);
    for (int k = 0; k <= length_ / 2; ++k) {
      const double gain = 1.0 / std::sqrt(static_cast<double>(std::max(k, 1)));
      freq_[k][0] *= gain;
      freq_[k][1] *= gain;
    }
    fftw_execute(inverse_);
    for (int t = 0; t < length_; ++t) column(t) = time_[t] / length_;
  }

 private:
  int length_;
  double* time_;
  fftw_complex* freq_;
  fftw_plan forward_;
  fftw_plan inverse_;
};

}  // namespace

double measured_snr_db(const Frames& clean, const Frames& noisy) {
  if (clean.rows() != noisy.rows() || clean.cols() != noisy.cols())
    throw ShapeError("clean and noisy sequences differ in shape");
  const double noise = mean_square(noisy - clean);
  return 10.0 * std::log10(mean_square(clean) / noise);
}

SequenceDataset add_noise(const SequenceDataset& ds, NoiseKind kind, double snr_db, std::uint64_t seed,
                          NoiseReport* report) {
  if (std::isnan(snr_db) || snr_db == -std::numeric_limits<double>::infinity())
    throw ConfigError("SNR must be a finite number of dB (or +inf to disable noise)");
  NoiseReport local;
  if (snr_db == std::numeric_limits<double>::infinity()) {
    if (report) *report = local;
    return ds;
  }
  SequenceDataset out(ds.dim());
  std::normal_distribution<double> normal(0.0, 1.0);
  for (std::size_t r = 0; r < ds.size(); ++r) {
    const auto& item = ds.items()[r];
    const std::string& label = ds.classes()[static_cast<std::size_t>(item.label)];
    const double signal_power = mean_square(item.frames);
    if (!(signal_power > 0.0)) {
      ++local.zero_power;
      log_warning("sequence " + std::to_string(r) + " has zero power; left without noise");
      out.add(label, item.frames);
      continue;
    }
    std::mt19937_64 rng(derive_seed(seed, r));
    Frames noise(item.frames.rows(), item.frames.cols());
    for (Eigen::Index i = 0; i < noise.size(); ++i) noise.data()[i] = normal(rng);
    if (kind == NoiseKind::kPink) {
      PinkShaper shaper(static_cast<int>(noise.rows()));
      for (Eigen::Index c = 0; c < noise.cols(); ++c) {
        Vector column = noise.col(c);
        shaper.shape(column);
        noise.col(c) = column;
      }
    }
    const double raw_power = mean_square(noise);
    const double target_power = signal_power / std::pow(10.0, snr_db / 10.0);
    if (raw_power > 0.0) noise *= std::sqrt(target_power / raw_power);
    out.add(label, item.frames + noise);
    ++local.perturbed;
  }
  if (report) *report = local;
  return out;
}

}  // namespace genhmm::data
