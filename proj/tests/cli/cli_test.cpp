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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include "cli/common.hpp"
#include "cli/config.hpp"
#include "cli/metrics.hpp"

namespace fs = std::filesystem;
using namespace genhmm_cli;

namespace {

const std::string kCli = GENHMM_CLI_PATH;

// Runs the CLI in `dir`; returns its exit status.
int run(const fs::path& dir, const std::string& args) {
  const std::string cmd = "cd '" + dir.string() + "' && '" + kCli + "' -q " + args + " > cli.out 2> cli.err";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::map<std::string, std::string> key_values(const std::string& text) {
  std::map<std::string, std::string> out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find('=');
    if (eq != std::string::npos) out[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return out;
}

struct Scratch {
  fs::path dir;
  explicit Scratch(const std::string& name) : dir(fs::temp_directory_path() / ("genhmm_cli_" + name)) {
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  ~Scratch() { fs::remove_all(dir); }
};

const char* kFastFlow = "--blocks 1 --hidden 8 --k 2 --inner-batches 3 --lr 0.005";

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("macro F1 on a hand-built 2x2 confusion matrix") {
  Confusion c({"pos", "neg"});
  for (int i = 0; i < 8; ++i) c.add(0, 0);
  for (int i = 0; i < 2; ++i) c.add(0, 1);
  c.add(1, 0);
  for (int i = 0; i < 9; ++i) c.add(1, 1);
  const MetricsReport r = compute_metrics(c);
  CHECK(r.per_class[0].f1 == doctest::Approx(16.0 / 19.0).epsilon(1e-15));
  CHECK(r.per_class[0].precision == doctest::Approx(8.0 / 9.0));
  CHECK(r.per_class[0].recall == doctest::Approx(0.8));
  CHECK(r.accuracy == doctest::Approx(17.0 / 20.0));
  const double f1_neg = 2.0 * (9.0 / 11.0) * 0.9 / (9.0 / 11.0 + 0.9);
  CHECK(r.macro_f1 == doctest::Approx((16.0 / 19.0 + f1_neg) / 2.0));
  CHECK(r.macro_precision == doctest::Approx((8.0 / 9.0 + 9.0 / 11.0) / 2.0));
}

TEST_CASE("confusion bookkeeping with unclassifiable sequences") {
  Confusion c({"a", "b", "c"});
  c.add(0, 0);
  c.add(0, -1);
  c.add(1, 2);
  c.add(2, 2);
  c.add(2, 2);
  CHECK(c.row_total(0) == 2);
  CHECK(c.row_total(1) == 1);
  CHECK(c.row_total(2) == 2);
  CHECK(c.total() == 5);
  CHECK(c.unclassifiable(0) == 1);
  const MetricsReport r = compute_metrics(c);
  CHECK(r.accuracy == doctest::Approx(3.0 / 5.0));
  CHECK(r.unclassifiable == 1);
  CHECK(r.per_class[1].precision == 0.0);  // never predicted
  CHECK(r.per_class[1].f1 == 0.0);
  for (const auto& m : r.per_class) {
    CHECK(m.precision >= 0.0);
    CHECK(m.precision <= 1.0);
  }
  const auto kv = key_values(format_keyvalue(r, c));
  CHECK(kv.at("class.0.confusion") == "1,0,0,1");
  CHECK(kv.at("total") == "5");
  CHECK(format_table(r, c).find("none") != std::string::npos);
  CHECK_THROWS(c.add(3, 0));
}

TEST_CASE("exit codes are distinct per failure family") {
  CHECK(exit_code_for(GENHMM_OK) == 0);
  CHECK(exit_code_for(GENHMM_ERR_CONFIG) == kExitConfig);
  CHECK(exit_code_for(GENHMM_ERR_INVALID_ARGUMENT) == kExitConfig);
  CHECK(exit_code_for(GENHMM_ERR_DATA) == kExitData);
  CHECK(exit_code_for(GENHMM_ERR_SHAPE) == kExitData);
  CHECK(exit_code_for(GENHMM_ERR_IO) == kExitData);
  CHECK(exit_code_for(GENHMM_ERR_NUMERICAL) == kExitNumerical);
  CHECK(exit_code_for(GENHMM_ERR_INTERNAL) == kExitFailure);
  CHECK(kExitConfig != kExitData);
  CHECK(kExitData != kExitNumerical);
}

TEST_CASE("config file fills options the command line left unset") {
  Scratch s("config");
  const fs::path cfg = s.dir / "run.cfg";
  std::ofstream(cfg) << "# comment\nk = 5\nlr = 0.01\nmax_em = 7\nmodel = gmmhmm\n";
  CLI::App app;
  RunConfig rc;
  add_run_options(app, rc);
  app.parse(std::vector<std::string>{"2", "--k"});  // reversed argv: --k 2
  apply_config_file(app, cfg.string());
  CHECK(rc.k == 2);
  CHECK(rc.lr == 0.01);
  CHECK(rc.max_em == 7);
  CHECK(rc.model == "gmmhmm");

  std::ofstream(cfg) << "bogus = 1\n";
  CLI::App app2;
  RunConfig rc2;
  add_run_options(app2, rc2);
  app2.parse(std::vector<std::string>{});
  CHECK_THROWS_AS(apply_config_file(app2, cfg.string()), CliError);

  std::ofstream(cfg) << "model = hmm\n";
  CLI::App app3;
  RunConfig rc3;
  add_run_options(app3, rc3);
  app3.parse(std::vector<std::string>{});
  CHECK_THROWS_AS(apply_config_file(app3, cfg.string()), CliError);
}

TEST_CASE("run configuration validation and hashing") {
  RunConfig a;
  CHECK_NOTHROW(a.validate());
  RunConfig b = a;
  b.threads = 8;
  CHECK(a.hash() == b.hash());
  b.lr = 2e-3;
  CHECK(a.hash() != b.hash());
  RunConfig bad = a;
  bad.tol = 0;
  CHECK_THROWS_AS(bad.validate(), CliError);
  bad = a;
  bad.model = "x";
  CHECK_THROWS_AS(bad.validate(), CliError);
  CHECK(a.train_config().num_components == 3);
  CHECK(a.train_config().flow_blocks == 4);
  CHECK(a.train_config().hidden_width == 24);
}

TEST_CASE("helpers") {
  CHECK(file_stem("a/b c") == "a_b_c");
  CHECK(file_stem("..") == "_..");
  CHECK(split_list("1, 3,5") == std::vector<std::string>{"1", "3", "5"});
  CHECK_THROWS_AS(split_list("1,,2"), CliError);
  CHECK(class_seed(1, "a") != class_seed(1, "b"));
  CHECK(class_seed(1, "a") != class_seed(2, "a"));
  CHECK(class_seed(1, "a") == class_seed(1, "a"));
  CHECK(format_real(0.1) == "0.1");
  CHECK(format_real(-INFINITY) == "-inf");
}

TEST_CASE("train produces one checkpoint per class, a log, and is reproducible") {
  Scratch s("train");
  REQUIRE(run(s.dir, "synth --classes 2 --train-per-class 8 --test-per-class 6 --seed 4 "
                     "--train-out train.txt --test-out test.txt") == 0);
  const std::string args = std::string("train --data train.txt --max-em 3 ") + kFastFlow;
  REQUIRE(run(s.dir, args + " --out a") == 0);
  CHECK(fs::exists(s.dir / "a/000-c0.json"));
  CHECK(fs::exists(s.dir / "a/001-c1.json"));
  CHECK_FALSE(fs::exists(s.dir / "a/000-c0.partial.json"));
  const std::string log = slurp(s.dir / "a/train.log");
  CHECK(log.find("class=c1 iteration=3 loglik=") != std::string::npos);
  CHECK(slurp(s.dir / "a/models.txt") == "c0\t000-c0.json\nc1\t001-c1.json\n");

  REQUIRE(run(s.dir, args + " --out b") == 0);
  CHECK(slurp(s.dir / "a/000-c0.json") == slurp(s.dir / "b/000-c0.json"));
  CHECK(slurp(s.dir / "a/001-c1.json") == slurp(s.dir / "b/001-c1.json"));
  CHECK(slurp(s.dir / "a/train.log") == slurp(s.dir / "b/train.log"));

  SUBCASE("separable toy set is classified perfectly") {
    REQUIRE(run(s.dir, "eval --models a --data test.txt --out report.txt") == 0);
    const auto kv = key_values(slurp(s.dir / "report.txt"));
    CHECK(kv.at("accuracy") == "1");
    CHECK(kv.at("class.0.count") == "6");
    CHECK(kv.at("class.1.count") == "6");
    CHECK(kv.at("train.config_hash").size() == 16);
    CHECK(kv.at("train.seed") == "0");
    CHECK(kv.count("wall_time_s") == 1);
    CHECK(slurp(s.dir / "cli.out").find("macro f1") != std::string::npos);
  }
  SUBCASE("noisy evaluation is reproducible from its seed") {
    REQUIRE(run(s.dir, "eval --models a --data test.txt --noise pink --snr-db 0 --seed 3 --out n1.txt") == 0);
    REQUIRE(run(s.dir, "eval --models a --data test.txt --noise pink --snr-db 0 --seed 3 --out n2.txt") == 0);
    auto n1 = key_values(slurp(s.dir / "n1.txt"));
    auto n2 = key_values(slurp(s.dir / "n2.txt"));
    n1.erase("wall_time_s");
    n2.erase("wall_time_s");
    CHECK(n1 == n2);
    CHECK(n1.at("noise") == "pink");
  }
  SUBCASE("N mismatch between models and data") {
    REQUIRE(run(s.dir, "synth --dim 3 --classes 2 --train-per-class 1 --test-per-class 1 "
                       "--train-out d3.txt --test-out d3t.txt") == 0);
    CHECK(run(s.dir, "eval --models a --data d3t.txt") == kExitData);
    CHECK(slurp(s.dir / "cli.err").find("frame dimension") != std::string::npos);
  }
}

TEST_CASE("interrupted training resumes to the same result") {
  Scratch s("resume");
  REQUIRE(run(s.dir, "synth --classes 2 --train-per-class 6 --test-per-class 1 --seed 9 "
                     "--train-out train.txt --test-out test.txt") == 0);
  const std::string base = std::string("train --data train.txt ") + kFastFlow;
  REQUIRE(run(s.dir, base + " --max-em 4 --out full") == 0);

  // State after iteration 2 for class c1, as a per-iteration checkpoint
  // would have left it; class c0 already finished.
  REQUIRE(run(s.dir, base + " --max-em 2 --out short") == 0);
  fs::create_directories(s.dir / "cut");
  fs::copy_file(s.dir / "full/run.cfg", s.dir / "cut/run.cfg");
  fs::copy_file(s.dir / "full/000-c0.json", s.dir / "cut/000-c0.json");
  fs::copy_file(s.dir / "short/001-c1.json", s.dir / "cut/001-c1.partial.json");
  REQUIRE(run(s.dir, base + " --max-em 4 --out cut --resume") == 0);
  CHECK(slurp(s.dir / "cut/001-c1.json") == slurp(s.dir / "full/001-c1.json"));
  CHECK(slurp(s.dir / "cut/train.log") == slurp(s.dir / "full/train.log"));
  CHECK_FALSE(fs::exists(s.dir / "cut/001-c1.partial.json"));

  // a different configuration cannot resume this run
  CHECK(run(s.dir, base + " --max-em 4 --lr 0.5 --out cut --resume") == kExitConfig);
}

TEST_CASE("error exit statuses") {
  Scratch s("errors");
  CHECK(run(s.dir, "train --data missing.txt --out x") == kExitData);
  CHECK(run(s.dir, "train --out x") == kExitConfig);
  CHECK(run(s.dir, "train --data x --out y --k 0") == kExitConfig);
  CHECK(run(s.dir, "train --data x --out y --model hmm") == kExitConfig);
  CHECK(run(s.dir, "frobnicate") == kExitConfig);
  CHECK(run(s.dir, "eval --models nowhere --data x") == kExitData);
  std::ofstream(s.dir / "bad.txt") << "a\t2\t2\t1 2 3\n";
  CHECK(run(s.dir, "train --data bad.txt --out y") == kExitData);
  std::ofstream(s.dir / "c.cfg") << "nonsense = 1\n";
  CHECK(run(s.dir, "train --config c.cfg --data bad.txt --out y") == kExitConfig);
  CHECK(run(s.dir, "--help") == 0);
}

TEST_CASE("bench: a grid of one gives a single report") {
  Scratch s("bench1");
  REQUIRE(run(s.dir, std::string("bench --synthetic separated --classes 2 --train-per-class 6 --test-per-class 4 "
                                 "--models gmmhmm --ks 1 --snrs clean --max-em 3 --out grid")) == 0);
  int reports = 0;
  for (const auto& e : fs::directory_iterator(s.dir / "grid")) reports += e.path().filename().string().rfind("cell-", 0) == 0;
  CHECK(reports == 1);
  const auto kv = key_values(slurp(s.dir / "grid/summary.txt"));
  CHECK(kv.at("cells") == "1");
  CHECK(kv.at("cell.0.status") == "ok");
}

TEST_CASE("bench: failing cells are reported and the sweep continues") {
  Scratch s("bench2");
  const int code = run(s.dir, "bench --synthetic separated --classes 2 --train-per-class 6 --test-per-class 4 "
                              "--models gmmhmm --ks 0,1 --snrs clean,10 --max-em 2 --out grid");
  CHECK(code == kExitConfig);
  const auto kv = key_values(slurp(s.dir / "grid/summary.txt"));
  CHECK(kv.at("cells") == "4");
  CHECK(kv.at("cell.0.status") == "failed");
  CHECK(kv.at("cell.1.status") == "failed");
  CHECK(kv.at("cell.2.status") == "ok");
  CHECK(kv.at("cell.3.status") == "ok");
  CHECK(slurp(s.dir / "cli.err").find("K=0") != std::string::npos);
  CHECK(run(s.dir, "bench --synthetic separated --ks , --out g") == kExitConfig);
}

}  // TEST_SUITE
