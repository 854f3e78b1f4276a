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

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <span>

#include "genhmm/types.hpp"

namespace genhmm {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();
inline constexpr double kLog2Pi = 1.8378770664093454835606594728112;

// Max-subtraction log-sum-exp. Returns -inf when every entry is -inf.
inline double logsumexp(std::span<const double> values) {
  double peak = kNegInf;
  for (double v : values) peak = std::max(peak, v);
  if (peak == kNegInf) return kNegInf;
  double sum = 0.0;
  for (double v : values) sum += std::exp(v - peak);
  return peak + std::log(sum);
}

template <typename Derived>
double logsumexp(const Eigen::DenseBase<Derived>& values) {
  const double peak = values.maxCoeff();
  if (peak == kNegInf) return kNegInf;
  return peak + std::log((values.derived().array() - peak).exp().sum());
}

// Elementwise tanh through the vectorized exp; agrees with std::tanh to a
// few ulp and saturates cleanly to +-1.
template <typename Derived>
Eigen::Array<double, Derived::RowsAtCompileTime, Derived::ColsAtCompileTime> tanh_array(
    const Eigen::ArrayBase<Derived>& x) {
  return 1.0 - 2.0 / ((2.0 * x.derived()).exp() + 1.0);
}

inline double safe_log(double p) { return p > 0.0 ? std::log(p) : kNegInf; }

template <typename Derived>
bool all_finite(const Eigen::DenseBase<Derived>& values) {
  return values.derived().array().isFinite().all();
}

// Standard normal log-density of a vector.
inline double standard_normal_logpdf(const Eigen::Ref<const Vector>& z) {
  return -0.5 * static_cast<double>(z.size()) * kLog2Pi - 0.5 * z.squaredNorm();
}

// FNV-1a, used for stable seed derivation and parameter fingerprints.
inline std::uint64_t fnv1a(const void* data, std::size_t bytes,
                           std::uint64_t hash = 14695981039346656037ull) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < bytes; ++i) {
    hash ^= p[i];
    hash *= 1099511628211ull;
  }
  return hash;
}

inline std::uint64_t derive_seed(std::uint64_t root, std::uint64_t a,
                                 std::uint64_t b = 0) {
  std::uint64_t h = fnv1a(&root, sizeof root);
  h = fnv1a(&a, sizeof a, h);
  return fnv1a(&b, sizeof b, h);
}

}  // namespace genhmm
