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

#include "commands.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include "common.hpp"
#include "metrics.hpp"

namespace fs = std::filesystem;

namespace genhmm_cli {
namespace {

using KeyValues = std::map<std::string, std::string>;

KeyValues parse_key_values(const std::string& text, const std::string& source) {
  KeyValues out;
  std::istringstream in(text);
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) data_error(source + ":" + std::to_string(number) + ": expected key = value");
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      if (b == std::string::npos) return std::string();
      return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
    };
    out[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return out;
}

// Runs body(0..n-1) on up to `jobs` threads. The first failure in index
// order is rethrown after every task finished.
void run_jobs(int n, int jobs, const std::function<void(int)>& body) {
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(n));
  if (jobs <= 1 || n <= 1) {
    for (int i = 0; i < n; ++i) {
      try {
        body(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  } else {
    std::mutex mu;
    int next = 0;
    std::vector<std::thread> pool;
    for (int w = 0; w < std::min(jobs, n); ++w) {
      pool.emplace_back([&] {
        for (;;) {
          int i;
          {
            std::lock_guard<std::mutex> lock(mu);
            if (next >= n) return;
            i = next++;
          }
          try {
            body(i);
          } catch (...) {
            errors[i] = std::current_exception();
          }
        }
      });
    }
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

struct ProgressSink {
  std::function<bool(const genhmm_model*, int, double)> fn;

  static int trampoline(const genhmm_model* model, int iteration, double loglik, void* user) {
    auto* self = static_cast<ProgressSink*>(user);
    return self->fn(model, iteration, loglik) ? 0 : 1;
  }
};

std::vector<double> history_of(const genhmm_model* model) {
  const double* values = nullptr;
  int count = 0;
  check(genhmm_model_history(model, &values, &count), "reading history");
  return std::vector<double>(values, values + count);
}

Dataset standardized(const genhmm_dataset* fit_on, const genhmm_dataset* apply_to) {
  genhmm_dataset* out = nullptr;
  check(genhmm_dataset_standardize(fit_on, apply_to, &out), "standardizing");
  return Dataset(out);
}

genhmm_noise_kind noise_kind(const std::string& name) {
  if (name == "white") return GENHMM_NOISE_WHITE;
  if (name == "pink") return GENHMM_NOISE_PINK;
  config_error("unknown noise kind '" + name + "'");
}

Dataset noisy(const genhmm_dataset* ds, const std::string& kind, double snr_db, std::uint64_t seed) {
  genhmm_dataset* out = nullptr;
  check(genhmm_dataset_add_noise(ds, noise_kind(kind), snr_db, seed, &out), "adding noise");
  return Dataset(out);
}

Model create_model(const RunConfig& config, const std::string& label, const genhmm_dataset* data) {
  genhmm_train_config tc = config.train_config();
  tc.seed = class_seed(config.seed, label);
  genhmm_model* m = nullptr;
  check(genhmm_model_create(&tc, label.c_str(), data, &m), "initializing model for class '" + label + "'");
  return Model(m);
}

// Classifies every sequence of `data`; its labels are matched to models by
// name.
Confusion evaluate(const std::vector<Model>& models, const genhmm_dataset* data, bool per_frame, int threads) {
  std::vector<std::string> labels;
  std::vector<const genhmm_model*> raw;
  for (const auto& m : models) {
    labels.emplace_back(genhmm_model_label(m.get()));
    raw.push_back(m.get());
  }
  const int dim = genhmm_dataset_dim(data);
  for (const auto* m : raw) {
    int s = 0, k = 0, n = 0;
    check(genhmm_model_shape(m, &s, &k, &n), "reading model shape");
    if (n != dim) {
      throw CliError(GENHMM_ERR_SHAPE, "model '" + std::string(genhmm_model_label(m)) + "' has frame dimension " +
                                           std::to_string(n) + " but the data has " + std::to_string(dim));
    }
  }
  std::vector<int> truth_of_class(static_cast<std::size_t>(genhmm_dataset_num_classes(data)), -1);
  for (std::size_t c = 0; c < truth_of_class.size(); ++c) {
    const std::string name = genhmm_dataset_class_name(data, static_cast<int>(c));
    for (std::size_t j = 0; j < labels.size(); ++j) {
      if (labels[j] == name) truth_of_class[c] = static_cast<int>(j);
    }
    if (truth_of_class[c] < 0) data_error("test class '" + name + "' has no trained model");
  }

  const int n = genhmm_dataset_size(data);
  std::vector<int> truth(n), predicted(n);
  const int workers = std::max(1, std::min(threads, n));
  const int per = (n + workers - 1) / std::max(workers, 1);
  run_jobs(workers, workers, [&](int w) {
    std::vector<double> scores(raw.size());
    for (int i = w * per; i < std::min(n, (w + 1) * per); ++i) {
      int cls = 0, len = 0;
      const double* frames = nullptr;
      check(genhmm_dataset_item(data, i, &cls, &len, &frames), "reading sequence");
      truth[i] = truth_of_class[cls];
      check(genhmm_classify(raw.data(), static_cast<int>(raw.size()), frames, len, dim, per_frame ? 1 : 0,
                            &predicted[i], scores.data()),
            "classifying sequence " + std::to_string(i));
    }
  });
  Confusion confusion(labels);
  for (int i = 0; i < n; ++i) confusion.add(truth[i], predicted[i]);
  return confusion;
}

genhmm_synthetic_params synthetic_params(const std::string& preset, int classes, int dim, int train_per_class,
                                         int test_per_class, std::uint64_t seed) {
  genhmm_synthetic_params p = genhmm_synthetic_params_default();
  if (preset == "separated") {
    p.preset = GENHMM_SYNTH_SEPARATED;
  } else if (preset == "warped") {
    p.preset = GENHMM_SYNTH_WARPED;
  } else if (preset == "multimodal") {
    p.preset = GENHMM_SYNTH_MULTIMODAL;
  } else {
    config_error("unknown synthetic preset '" + preset + "'");
  }
  if (classes > 0) p.classes = classes;
  if (dim > 0) p.dim = dim;
  if (train_per_class > 0) p.train_per_class = train_per_class;
  if (test_per_class > 0) p.test_per_class = test_per_class;
  p.seed = seed;
  return p;
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::string hex(std::uint64_t v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

void ensure_directory(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw CliError(GENHMM_ERR_IO, "cannot create directory " + dir);
}

}  // namespace

int cmd_train(const TrainOptions& o) {
  const auto start = std::chrono::steady_clock::now();
  o.config.validate();
  if (o.data.empty()) config_error("--data is required");
  if (o.out.empty()) config_error("--out is required");

  Dataset raw = load_dataset(o.data);
  Dataset data = o.standardize ? standardized(raw.get(), raw.get()) : std::move(raw);
  const int classes = genhmm_dataset_num_classes(data.get());
  if (classes == 0) data_error(o.data + ": no sequences");

  ensure_directory(o.out);
  const fs::path out(o.out);
  const std::string run_cfg = (out / "run.cfg").string();
  const std::string hash = hex(o.config.hash());
  if (o.resume && fs::exists(run_cfg)) {
    const KeyValues prev = parse_key_values(read_text(run_cfg), run_cfg);
    const auto it = prev.find("config_hash");
    if (it == prev.end() || it->second != hash) {
      config_error("cannot resume: configuration differs from the run in " + o.out);
    }
    if (prev.count("standardize") && prev.at("standardize") != (o.standardize ? "1" : "0")) {
      config_error("cannot resume: --standardize differs from the run in " + o.out);
    }
  }
  {
    std::ostringstream cfg;
    cfg << "# genhmm run configuration\n" << o.config.to_text();
    cfg << "data = " << fs::absolute(o.data).string() << "\n";
    cfg << "standardize = " << (o.standardize ? 1 : 0) << "\n";
    cfg << "config_hash = " << hash << "\n";
    write_atomic(run_cfg, cfg.str());
  }

  std::vector<std::string> labels(classes), finals(classes), partials(classes);
  for (int c = 0; c < classes; ++c) {
    labels[c] = genhmm_dataset_class_name(data.get(), c);
    char prefix[16];
    std::snprintf(prefix, sizeof prefix, "%03d-", c);
    const std::string stem = prefix + file_stem(labels[c]);
    finals[c] = (out / (stem + ".json")).string();
    partials[c] = (out / (stem + ".partial.json")).string();
  }

  std::mutex mu;
  std::vector<std::vector<double>> histories(classes);
  const std::string log_path = (out / "train.log").string();
  auto write_log = [&] {
    std::ostringstream log;
    log << "# config_hash=" << hash << " seed=" << o.config.seed << "\n";
    for (int c = 0; c < classes; ++c) {
      for (std::size_t i = 0; i < histories[c].size(); ++i) {
        log << "class=" << labels[c] << " iteration=" << i + 1 << " loglik=" << format_real(histories[c][i])
            << "\n";
      }
    }
    write_atomic(log_path, log.str());
  };

  run_jobs(classes, o.jobs, [&](int c) {
    if (o.resume && fs::exists(finals[c])) {
      Model m = load_model(finals[c]);
      std::lock_guard<std::mutex> lock(mu);
      histories[c] = history_of(m.get());
      if (!o.quiet) std::cerr << "[" << labels[c] << "] already trained\n";
      return;
    }
    Dataset own = filter_class(data.get(), c);
    Model model;
    if (o.resume && fs::exists(partials[c])) {
      model = load_model(partials[c]);
      if (genhmm_model_kind(model.get()) != o.config.model_type() || labels[c] != genhmm_model_label(model.get())) {
        config_error(partials[c] + " does not match the requested model");
      }
      check(genhmm_model_set_limits(model.get(), o.config.max_em, o.config.threads), "setting limits");
      if (!o.quiet) {
        std::lock_guard<std::mutex> lock(mu);
        std::cerr << "[" << labels[c] << "] resuming at iteration " << genhmm_model_iteration(model.get()) << "\n";
      }
    } else {
      model = create_model(o.config, labels[c], own.get());
    }
    ProgressSink sink{[&](const genhmm_model* m, int iteration, double ll) {
      check(genhmm_model_save(m, partials[c].c_str(), 1), "writing " + partials[c]);
      std::lock_guard<std::mutex> lock(mu);
      histories[c] = history_of(m);
      write_log();
      if (!o.quiet) {
        std::fprintf(stderr, "[%s] iteration %d  loglik/frame %.6f\n", labels[c].c_str(), iteration, ll);
      }
      return true;
    }};
    check(genhmm_model_train(model.get(), own.get(), &ProgressSink::trampoline, &sink),
          "training class '" + labels[c] + "'");
    check(genhmm_model_save(model.get(), finals[c].c_str(), 1), "writing " + finals[c]);
    std::error_code ec;
    fs::remove(partials[c], ec);
    std::lock_guard<std::mutex> lock(mu);
    histories[c] = history_of(model.get());
    if (!o.quiet) {
      std::cerr << "[" << labels[c] << "] done after " << genhmm_model_iteration(model.get()) << " iterations"
                << (genhmm_model_converged(model.get()) ? " (converged)" : "") << "\n";
    }
  });
  write_log();

  std::ostringstream manifest;
  for (int c = 0; c < classes; ++c) manifest << labels[c] << "\t" << fs::path(finals[c]).filename().string() << "\n";
  write_atomic((out / "models.txt").string(), manifest.str());
  if (!o.quiet) {
    std::fprintf(stderr, "trained %d models in %.1f s -> %s\n", classes, seconds_since(start), o.out.c_str());
  }
  return kExitOk;
}

namespace {

struct LoadedRun {
  std::vector<Model> models;
  KeyValues run;
};

LoadedRun load_run(const std::string& dir) {
  LoadedRun r;
  const fs::path base(dir);
  const std::string manifest = (base / "models.txt").string();
  if (!fs::exists(manifest)) data_error("no models.txt in " + dir + " (was training completed?)");
  std::istringstream in(read_text(manifest));
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) data_error(manifest + ": malformed line");
    r.models.push_back(load_model((base / line.substr(tab + 1)).string()));
  }
  if (r.models.empty()) data_error(manifest + ": no models");
  const auto kind = genhmm_model_kind(r.models.front().get());
  for (const auto& m : r.models) {
    if (genhmm_model_kind(m.get()) != kind) data_error(dir + ": models of different kinds");
  }
  const std::string run_cfg = (base / "run.cfg").string();
  if (fs::exists(run_cfg)) r.run = parse_key_values(read_text(run_cfg), run_cfg);
  return r;
}

}  // namespace

int cmd_eval(const EvalOptions& o) {
  const auto start = std::chrono::steady_clock::now();
  if (o.models.empty()) config_error("--models is required");
  if (o.data.empty()) config_error("--data is required");
  if (!o.noise.empty()) {
    noise_kind(o.noise);
    if (std::isnan(o.snr_db)) config_error("--snr-db is required with --noise");
  }
  if (o.threads < 1) config_error("--threads must be positive");

  LoadedRun run = load_run(o.models);
  Dataset data = load_dataset(o.data);
  if (!o.noise.empty()) data = noisy(data.get(), o.noise, o.snr_db, o.seed);
  const bool standardize = run.run.count("standardize") && run.run.at("standardize") == "1";
  if (standardize) {
    if (!run.run.count("data")) data_error(o.models + "/run.cfg does not record the training data");
    Dataset train = load_dataset(run.run.at("data"));
    data = standardized(train.get(), data.get());
  }

  const Confusion confusion = evaluate(run.models, data.get(), o.per_frame, o.threads);
  const MetricsReport report = compute_metrics(confusion);
  std::cout << format_table(report, confusion);

  if (!o.out.empty()) {
    std::ostringstream kv;
    kv << "command=eval\n";
    kv << "models=" << fs::absolute(o.models).string() << "\n";
    kv << "data=" << fs::absolute(o.data).string() << "\n";
    kv << "noise=" << (o.noise.empty() ? "none" : o.noise) << "\n";
    kv << "snr_db=" << (o.noise.empty() ? "inf" : format_real(o.snr_db)) << "\n";
    kv << "noise_seed=" << o.seed << "\n";
    kv << "per_frame=" << (o.per_frame ? 1 : 0) << "\n";
    for (const auto& [key, value] : run.run) kv << "train." << key << "=" << value << "\n";
    kv << format_keyvalue(report, confusion);
    kv << "wall_time_s=" << format_real(seconds_since(start)) << "\n";
    write_atomic(o.out, kv.str());
  }
  return kExitOk;
}

int cmd_bench(const BenchOptions& o) {
  const auto start = std::chrono::steady_clock::now();
  if (o.out.empty()) config_error("--out is required");
  noise_kind(o.noise);

  std::vector<std::string> models = split_list(o.models);
  for (const auto& m : models) {
    if (m != "genhmm" && m != "gmmhmm") config_error("unknown model type '" + m + "'");
  }
  std::vector<int> ks;
  for (const auto& k : split_list(o.ks)) {
    try {
      std::size_t used = 0;
      ks.push_back(std::stoi(k, &used));
      if (used != k.size()) throw std::invalid_argument(k);
    } catch (const std::exception&) {
      config_error("invalid K '" + k + "'");
    }
  }
  std::vector<double> snrs;  // +inf: clean
  for (const auto& s : split_list(o.snrs)) {
    if (s == "clean" || s == "inf") {
      snrs.push_back(INFINITY);
      continue;
    }
    try {
      std::size_t used = 0;
      snrs.push_back(std::stod(s, &used));
      if (used != s.size() || std::isnan(snrs.back())) throw std::invalid_argument(s);
    } catch (const std::exception&) {
      config_error("invalid SNR '" + s + "'");
    }
  }

  Dataset train, test;
  std::string source;
  if (!o.synthetic.empty()) {
    if (!o.data.empty() || !o.test.empty()) config_error("--synthetic excludes --data and --test");
    const genhmm_synthetic_params p =
        synthetic_params(o.synthetic, o.classes, 0, o.train_per_class, o.test_per_class, o.data_seed);
    genhmm_dataset *tr = nullptr, *te = nullptr;
    check(genhmm_dataset_synthetic(&p, &tr, &te), "generating synthetic data");
    train.reset(tr);
    test.reset(te);
    source = "synthetic:" + o.synthetic + ":seed=" + std::to_string(o.data_seed);
  } else {
    if (o.data.empty() || o.test.empty()) config_error("either --synthetic or both --data and --test are required");
    train = load_dataset(o.data);
    test = load_dataset(o.test);
    source = fs::absolute(o.data).string() + "," + fs::absolute(o.test).string();
  }
  if (o.standardize) {
    Dataset fitted_test = standardized(train.get(), test.get());
    train = standardized(train.get(), train.get());
    test = std::move(fitted_test);
  }
  ensure_directory(o.out);
  const fs::path out(o.out);

  struct Cell {
    std::string model;
    int k = 0;
    double snr = 0.0;
    bool ok = false;
    std::string error;
    int exit_code = 0;
    MetricsReport report;
  };
  std::vector<Cell> cells;
  const int classes = genhmm_dataset_num_classes(train.get());
  for (const auto& m : models) {
    for (int k : ks) {
      RunConfig config = o.config;
      config.model = m;
      config.k = k;
      std::vector<Model> trained;
      std::string failure;
      int failure_code = 0;
      try {
        config.validate();
        trained.resize(classes);
        run_jobs(classes, o.jobs, [&](int c) {
          const std::string label = genhmm_dataset_class_name(train.get(), c);
          Dataset own = filter_class(train.get(), c);
          Model model = create_model(config, label, own.get());
          check(genhmm_model_train(model.get(), own.get(), nullptr, nullptr), "training class '" + label + "'");
          trained[c] = std::move(model);
        });
      } catch (const CliError& e) {
        failure = e.what();
        failure_code = exit_code_for(e.status());
      } catch (const std::exception& e) {
        failure = e.what();
        failure_code = kExitFailure;
      }
      for (double snr : snrs) {
        Cell cell;
        cell.model = m;
        cell.k = k;
        cell.snr = snr;
        const std::string snr_name = std::isinf(snr) ? "clean" : format_real(snr) + "dB";
        if (!failure.empty()) {
          cell.error = failure;
          cell.exit_code = failure_code;
        } else {
          try {
            Dataset noisy_test;
            const genhmm_dataset* eval_set = test.get();
            if (!std::isinf(snr)) {
              noisy_test = noisy(test.get(), o.noise, snr, fnv1a(snr_name, o.data_seed));
              eval_set = noisy_test.get();
            }
            const Confusion confusion = evaluate(trained, eval_set, o.per_frame, o.config.threads);
            cell.report = compute_metrics(confusion);
            cell.ok = true;
            std::ostringstream kv;
            kv << "command=bench\n";
            kv << "data=" << source << "\n";
            kv << "standardize=" << (o.standardize ? 1 : 0) << "\n";
            kv << "noise=" << (std::isinf(snr) ? "none" : o.noise) << "\n";
            kv << "snr_db=" << format_real(snr) << "\n";
            for (const auto& [key, value] : config.fields()) kv << "config." << key << "=" << value << "\n";
            kv << "config_hash=" << hex(config.hash()) << "\n";
            kv << format_keyvalue(cell.report, confusion);
            write_atomic((out / ("cell-" + m + "-k" + std::to_string(k) + "-" + snr_name + ".txt")).string(),
                         kv.str());
          } catch (const CliError& e) {
            cell.error = e.what();
            cell.exit_code = exit_code_for(e.status());
          } catch (const std::exception& e) {
            cell.error = e.what();
            cell.exit_code = kExitFailure;
          }
        }
        if (!cell.ok) std::cerr << "cell " << m << " K=" << k << " " << snr_name << " failed: " << cell.error << "\n";
        cells.push_back(std::move(cell));
      }
    }
  }

  std::ostringstream table, summary;
  char line[256];
  std::snprintf(line, sizeof line, "%-8s %4s %8s %10s %10s %10s\n", "model", "K", "snr", "accuracy", "precision",
                "macro-f1");
  table << line;
  summary << "command=bench\ndata=" << source << "\nseed=" << o.config.seed << "\ncells=" << cells.size() << "\n";
  int first_failure = kExitOk;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const Cell& c = cells[i];
    const std::string snr_name = std::isinf(c.snr) ? "clean" : format_real(c.snr);
    if (c.ok) {
      std::snprintf(line, sizeof line, "%-8s %4d %8s %9.2f%% %9.2f%% %9.2f%%\n", c.model.c_str(), c.k,
                    snr_name.c_str(), 100 * c.report.accuracy, 100 * c.report.macro_precision,
                    100 * c.report.macro_f1);
    } else {
      std::snprintf(line, sizeof line, "%-8s %4d %8s %10s\n", c.model.c_str(), c.k, snr_name.c_str(), "failed");
      if (first_failure == kExitOk) first_failure = c.exit_code;
    }
    table << line;
    const std::string p = "cell." + std::to_string(i) + ".";
    summary << p << "model=" << c.model << "\n" << p << "k=" << c.k << "\n" << p << "snr_db=" << format_real(c.snr)
            << "\n" << p << "status=" << (c.ok ? "ok" : "failed") << "\n";
    if (c.ok) {
      summary << p << "accuracy=" << format_real(c.report.accuracy) << "\n"
              << p << "macro_precision=" << format_real(c.report.macro_precision) << "\n"
              << p << "macro_f1=" << format_real(c.report.macro_f1) << "\n";
    } else {
      summary << p << "error=" << c.error << "\n";
    }
  }
  for (const auto& [key, value] : o.config.fields()) {
    if (key != "model" && key != "k") summary << "config." << key << "=" << value << "\n";
  }
  summary << "wall_time_s=" << format_real(seconds_since(start)) << "\n";
  write_atomic((out / "summary.txt").string(), summary.str());
  std::cout << table.str();
  return first_failure;
}

int cmd_synth(const SynthOptions& o) {
  if (o.train_out.empty() || o.test_out.empty()) config_error("--train-out and --test-out are required");
  const genhmm_synthetic_params p =
      synthetic_params(o.preset, o.classes, o.dim, o.train_per_class, o.test_per_class, o.seed);
  genhmm_dataset *tr = nullptr, *te = nullptr;
  check(genhmm_dataset_synthetic(&p, &tr, &te), "generating synthetic data");
  Dataset train(tr), test(te);
  check(genhmm_dataset_save(train.get(), o.train_out.c_str()), "writing " + o.train_out);
  check(genhmm_dataset_save(test.get(), o.test_out.c_str()), "writing " + o.test_out);
  return kExitOk;
}

}  // namespace genhmm_cli
