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

#include <doctest.h>

#include <cmath>
#include <complex>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "genhmm/dataset.hpp"
#include "genhmm/errors.hpp"
#include "genhmm/synthetic.hpp"
#include "oracles.hpp"

using namespace genhmm;
using namespace genhmm::data;

namespace {

SequenceDataset small_dataset(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  SequenceDataset ds(3);
  ds.add("aa", testing::random_frames(4, 3, rng, 2.0));
  ds.add("b b", testing::random_frames(2, 3, rng));
  ds.add("aa", testing::random_frames(6, 3, rng, 0.1));
  return ds;
}

bool same(const SequenceDataset& a, const SequenceDataset& b) {
  if (a.size() != b.size() || a.classes() != b.classes() || a.dim() != b.dim()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a.items()[i].label != b.items()[i].label || a.items()[i].frames != b.items()[i].frames) return false;
  }
  return true;
}

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("genhmm_data_test_" + name)).string();
}

// Slope of log(power) against log(frequency) over octave bands of the
// periodogram of `x`.
double spectral_slope(const std::vector<Vector>& signals) {
  const int T = static_cast<int>(signals.front().size());
  std::vector<double> lf, lp;
  for (int lo = 4; lo * 2 <= T / 2; lo *= 2) {
    double power = 0.0;
    int bins = 0;
    for (const auto& x : signals) {
      for (int k = lo; k < 2 * lo; ++k) {
        std::complex<double> acc = 0.0;
        for (int t = 0; t < T; ++t) acc += x(t) * std::polar(1.0, -2.0 * M_PI * k * t / T);
        power += std::norm(acc);
        ++bins;
      }
    }
    lf.push_back(std::log(1.5 * lo));
    lp.push_back(std::log(power / bins));
  }
  const double n = static_cast<double>(lf.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < lf.size(); ++i) {
    sx += lf[i];
    sy += lp[i];
    sxx += lf[i] * lf[i];
    sxy += lf[i] * lp[i];
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace

TEST_SUITE("data") {

TEST_CASE("dataset bookkeeping") {
  const SequenceDataset ds = small_dataset(1);
  CHECK(ds.size() == 3);
  CHECK(ds.classes() == std::vector<std::string>{"aa", "b b"});
  CHECK(ds.class_index("b b") == 1);
  CHECK(ds.class_index("zz") == -1);
  CHECK(ds.sequences_of(0).size() == 2);
  CHECK(ds.mean_length(0) == 5.0);
}

TEST_CASE("invalid sequences are rejected") {
  SequenceDataset ds(2);
  CHECK_THROWS_AS(ds.add("a", Frames(0, 2)), DataError);
  CHECK_THROWS_AS(ds.add("a", Frames::Zero(3, 3)), DataError);
  Frames bad = Frames::Zero(2, 2);
  bad(1, 1) = std::nan("");
  CHECK_THROWS_AS(ds.add("a", bad), DataError);
  CHECK_THROWS_AS(ds.add("a\tb", Frames::Zero(1, 2)), DataError);
  CHECK_THROWS_AS(ds.add("", Frames::Zero(1, 2)), DataError);
  CHECK(ds.empty());
}

TEST_CASE("text and gzip round trips are exact") {
  const SequenceDataset ds = small_dataset(2);
  for (const std::string name : {"rt.txt", "rt.txt.gz"}) {
    const std::string path = temp_path(name);
    save_dataset(ds, path);
    CHECK(same(load_dataset(path), ds));
    std::filesystem::remove(path);
  }
  // gzip content is detected regardless of the name
  const std::string gz = temp_path("x.gz"), plain = temp_path("x.dat");
  save_dataset(ds, gz);
  std::filesystem::rename(gz, plain);
  CHECK(same(load_dataset(plain), ds));
  std::filesystem::remove(plain);
}

TEST_CASE("parser errors name the line") {
  const char* cases[] = {
      "a\t2\t2\t1 2 3\n",         // too few values
      "a\t1\t2\t1 2 3\n",         // too many
      "a\t1\t2\t1 x\n",           // not a number
      "a\t1\t2\t1 nan\n",         // non-finite
      "a\t1\t2\n",                // missing field
      "a\t1\t2\t1 2\nb\t1\t3\t1 2 3\n",  // dimension change
      "a\t0\t2\t\n",
      "",
  };
  for (const char* text : cases) {
    std::istringstream in(text);
    CHECK_THROWS_AS(read_dataset(in, "mem"), DataError);
  }
  std::istringstream bad("a\t1\t2\t1 2\na\t1\t2\t1 q\n");
  try {
    read_dataset(bad, "mem");
    FAIL("expected an error");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("mem:2") != std::string::npos);
  }
  CHECK_THROWS_AS(load_dataset(temp_path("does-not-exist")), IoError);
}

TEST_CASE("standardizer") {
  const SequenceDataset ds = small_dataset(3);
  const Standardizer st = Standardizer::fit(ds);
  const SequenceDataset z = st.apply(ds);
  Vector sum = Vector::Zero(3), sq = Vector::Zero(3);
  double n = 0;
  for (const auto& it : z.items()) {
    sum += it.frames.colwise().sum().transpose();
    sq += it.frames.array().square().colwise().sum().matrix().transpose();
    n += it.frames.rows();
  }
  CHECK((sum / n).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(((sq / n).array() - 1.0).abs().maxCoeff() < 1e-12);
  const SequenceDataset back = st.invert(z);
  for (std::size_t i = 0; i < ds.size(); ++i)
    CHECK((back.items()[i].frames - ds.items()[i].frames).cwiseAbs().maxCoeff() < 1e-12);

  SequenceDataset flat(2);
  flat.add("c", Frames::Constant(3, 2, 4.0));
  const Standardizer fs = Standardizer::fit(flat);
  CHECK(fs.stddev.minCoeff() >= Standardizer::kStdFloor);
  CHECK(fs.apply(flat).items()[0].frames.allFinite());
  CHECK_THROWS_AS(fs.apply(ds), ShapeError);
}

TEST_CASE("noise is scaled to the requested per-sequence SNR") {
  const SequenceDataset ds = small_dataset(4);
  for (auto kind : {NoiseKind::kWhite, NoiseKind::kPink}) {
    for (double snr : {0.0, 10.0, 25.0}) {
      NoiseReport report;
      const SequenceDataset noisy = add_noise(ds, kind, snr, 9, &report);
      CHECK(report.perturbed == 3);
      for (std::size_t i = 0; i < ds.size(); ++i)
        CHECK(measured_snr_db(ds.items()[i].frames, noisy.items()[i].frames) == doctest::Approx(snr).epsilon(1e-9).scale(1.0));
    }
  }
  CHECK(same(add_noise(ds, NoiseKind::kWhite, INFINITY, 1), ds));
  CHECK(same(add_noise(ds, NoiseKind::kWhite, 10.0, 5), add_noise(ds, NoiseKind::kWhite, 10.0, 5)));
  CHECK_FALSE(same(add_noise(ds, NoiseKind::kWhite, 10.0, 5), add_noise(ds, NoiseKind::kWhite, 10.0, 6)));
}

TEST_CASE("zero-power sequences are left unchanged") {
  SequenceDataset ds(2);
  ds.add("z", Frames::Zero(4, 2));
  NoiseReport report;
  const SequenceDataset noisy = add_noise(ds, NoiseKind::kPink, 10.0, 1, &report);
  CHECK(report.zero_power == 1);
  CHECK(report.perturbed == 0);
  CHECK(noisy.items()[0].frames.isZero());
}

TEST_CASE("noise spectra: white is flat, pink falls as 1/f") {
  const int T = 512;
  SequenceDataset ds(2);
  for (int r = 0; r < 3; ++r) ds.add("s", Frames::Ones(T, 2));
  for (auto kind : {NoiseKind::kWhite, NoiseKind::kPink}) {
    const SequenceDataset noisy = add_noise(ds, kind, 0.0, 17);
    std::vector<Vector> noise;
    for (const auto& it : noisy.items())
      for (int d = 0; d < 2; ++d) noise.push_back((it.frames.col(d).array() - 1.0).matrix());
    const double slope = spectral_slope(noise);
    if (kind == NoiseKind::kWhite) {
      CHECK(std::abs(slope) < 0.15);
    } else {
      CHECK(slope == doctest::Approx(-1.0).epsilon(0.15));
    }
  }
}

TEST_CASE("synthetic presets are deterministic and well-formed") {
  PresetOptions o;
  o.train_per_class = 6;
  o.test_per_class = 3;
  o.seed = 21;
  for (auto preset : {SyntheticPreset::kSeparated, SyntheticPreset::kWarped, SyntheticPreset::kMultimodal}) {
    const SyntheticSpec spec = make_preset(preset, o);
    CHECK(spec.classes.size() == 3);
    const SyntheticSplit a = make_synthetic(spec);
    const SyntheticSplit b = make_synthetic(make_preset(preset, o));
    CHECK(same(a.train, b.train));
    CHECK(same(a.test, b.test));
    CHECK(a.train.size() == 18);
    CHECK(a.test.size() == 9);
    CHECK(a.train.dim() == 4);
    CHECK(a.train.classes() == std::vector<std::string>{"c0", "c1", "c2"});
    for (const auto& it : a.train.items()) {
      CHECK(it.frames.rows() >= o.min_length);
      CHECK(it.frames.rows() <= o.max_length);
    }
  }
  o.seed = 22;
  CHECK_FALSE(same(make_synthetic(make_preset(SyntheticPreset::kSeparated, o)).train,
                   make_synthetic(make_preset(SyntheticPreset::kSeparated, PresetOptions{})).train));
}

TEST_CASE("sampled paths follow the topology") {
  std::mt19937_64 rng(2);
  flow::FlowConfig cfg;
  cfg.dim = 2;
  cfg.blocks = 1;
  GenHmmModel m = GenHmmModel::initialize("p", 4, 2, cfg, rng);
  m.core.initial << 1.0, 0.0, 0.0, 0.0;
  for (int i = 0; i < 20; ++i) {
    std::vector<int> states;
    const Frames f = sample_sequence(m, 10, rng, &states);
    CHECK(f.rows() == 10);
    CHECK(states.front() == 0);
    for (std::size_t t = 1; t < states.size(); ++t) CHECK(states[t] >= states[t - 1]);
  }
}

TEST_CASE("translation block and warp") {
  flow::FlowConfig cfg;
  cfg.dim = 3;
  Vector offset(3);
  offset << 1.0, -2.0, 0.5;
  const flow::FlowGenerator gen(3, translation_block(offset, cfg));
  Vector x(3);
  x << 0.3, 0.3, 0.3;
  const auto r = flow::flow_inverse(gen, x);
  CHECK((r.z - (x - offset)).cwiseAbs().maxCoeff() < 1e-15);
  CHECK(r.log_det == 0.0);

  const Vector y = warp_frame(x, 0.5);
  CHECK(y(0) == x(0));
  CHECK(y(1) == doctest::Approx(x(1) + 0.5 * std::sin(y(0)) * y(0)));
  CHECK(y(2) == doctest::Approx(x(2) + 0.5 * std::sin(y(1)) * y(1)));
}

TEST_CASE("synthetic spec validation") {
  SyntheticSpec spec;
  CHECK_THROWS_AS(spec.validate(), ConfigError);
  std::mt19937_64 rng(1);
  flow::FlowConfig cfg;
  cfg.dim = 2;
  spec.classes.push_back(GenHmmModel::initialize("a", 3, 1, cfg, rng));
  spec.classes.push_back(GenHmmModel::initialize("a", 3, 1, cfg, rng));
  CHECK_THROWS_AS(spec.validate(), ConfigError);
  std::get<GenHmmModel>(spec.classes[1]).label = "b";
  CHECK_NOTHROW(spec.validate());
  spec.min_length = 5;
  spec.max_length = 4;
  CHECK_THROWS_AS(spec.validate(), ConfigError);
}

}  // TEST_SUITE
