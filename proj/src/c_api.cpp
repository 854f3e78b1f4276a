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

#include "genhmm/genhmm.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <new>
#include <string>
#include <variant>
#include <vector>

#include "genhmm/checkpoint.hpp"
#include "genhmm/dataset.hpp"
#include "genhmm/errors.hpp"
#include "genhmm/genhmm_model.hpp"
#include "genhmm/gmm_hmm.hpp"
#include "genhmm/logging.hpp"
#include "genhmm/synthetic.hpp"

struct genhmm_dataset {
  genhmm::data::SequenceDataset data;
};

struct genhmm_model {
  genhmm::io::AnyModel model;
  genhmm::TrainState state;
};

namespace {

using genhmm::Frames;

thread_local std::string g_last_error;

genhmm_status fail(genhmm_status status, std::string message) {
  g_last_error = std::move(message);
  return status;
}

// Runs `fn`, translating exceptions into status codes.
template <typename Fn>
genhmm_status guarded(Fn&& fn) {
  try {
    g_last_error.clear();
    return fn();
  } catch (const genhmm::ConfigError& e) {
    return fail(GENHMM_ERR_CONFIG, e.what());
  } catch (const genhmm::DataError& e) {
    return fail(GENHMM_ERR_DATA, e.what());
  } catch (const genhmm::IoError& e) {
    return fail(GENHMM_ERR_IO, e.what());
  } catch (const genhmm::NumericalError& e) {
    return fail(GENHMM_ERR_NUMERICAL, e.what());
  } catch (const genhmm::ShapeError& e) {
    return fail(GENHMM_ERR_SHAPE, e.what());
  } catch (const std::bad_alloc&) {
    return fail(GENHMM_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(GENHMM_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(GENHMM_ERR_INTERNAL, "unknown error");
  }
}

#define GENHMM_REQUIRE(cond, what) \
  if (!(cond)) return fail(GENHMM_ERR_INVALID_ARGUMENT, what)

Frames frames_from(const double* values, int length, int dim) {
  if (length < 1 || dim < 1) throw genhmm::ShapeError("sequence needs length >= 1 and dim >= 1");
  return Eigen::Map<const Frames>(values, length, dim);
}

std::vector<Frames> all_sequences(const genhmm::data::SequenceDataset& ds) {
  std::vector<Frames> out;
  out.reserve(ds.size());
  for (const auto& item : ds.items()) out.push_back(item.frames);
  return out;
}

genhmm::TrainConfig core_config(const genhmm_train_config& c) {
  genhmm::TrainConfig t;
  t.adam.learning_rate = c.learning_rate;
  t.batch_size = c.batch_size;
  t.inner_batches = c.inner_batches;
  t.max_iterations = c.max_iterations;
  t.tolerance = c.tolerance;
  t.seed = c.seed;
  t.threads = c.threads;
  return t;
}

void validate_config(const genhmm_train_config& c) {
  if (c.model_type != GENHMM_MODEL_FLOW && c.model_type != GENHMM_MODEL_GMM)
    throw genhmm::ConfigError("unknown model type");
  if (c.num_components < 1) throw genhmm::ConfigError("K must be >= 1");
  if (c.flow_blocks < 1) throw genhmm::ConfigError("flow blocks must be >= 1");
  if (c.hidden_width < 1) throw genhmm::ConfigError("hidden width must be >= 1");
  if (c.frames_per_state < 1) throw genhmm::ConfigError("frames per state must be >= 1");
  if (c.num_states < 0) throw genhmm::ConfigError("state count must be >= 0");
  core_config(c).validate();
}

genhmm::data::SequenceDataset* dataset_out(genhmm::data::SequenceDataset ds, genhmm_dataset** out) {
  *out = new genhmm_dataset{std::move(ds)};
  return &(*out)->data;
}

}  // namespace

extern "C" {

int genhmm_api_version(void) { return GENHMM_API_VERSION; }

const char* genhmm_status_string(genhmm_status status) {
  switch (status) {
    case GENHMM_OK: return "ok";
    case GENHMM_ERR_INVALID_ARGUMENT: return "invalid argument";
    case GENHMM_ERR_CONFIG: return "configuration error";
    case GENHMM_ERR_DATA: return "data error";
    case GENHMM_ERR_IO: return "i/o error";
    case GENHMM_ERR_NUMERICAL: return "numerical error";
    case GENHMM_ERR_SHAPE: return "shape error";
    case GENHMM_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

const char* genhmm_last_error(void) { return g_last_error.c_str(); }

void genhmm_set_log_callback(genhmm_log_fn fn, void* user) {
  if (!fn) {
    genhmm::set_log_sink({});
    return;
  }
  genhmm::set_log_sink([fn, user](genhmm::LogLevel level, std::string_view message) {
    const std::string text(message);
    fn(level >= genhmm::LogLevel::kWarning ? GENHMM_LOG_WARNING : GENHMM_LOG_INFO, text.c_str(), user);
  });
}

genhmm_status genhmm_dataset_create(int dim, genhmm_dataset** out) {
  GENHMM_REQUIRE(out, "out must not be NULL");
  GENHMM_REQUIRE(dim >= 1, "dim must be >= 1");
  return guarded([&] {
    dataset_out(genhmm::data::SequenceDataset(dim), out);
    return GENHMM_OK;
  });
}

genhmm_status genhmm_dataset_add(genhmm_dataset* ds, const char* label, const double* frames, int length) {
  GENHMM_REQUIRE(ds && label && frames, "dataset, label and frames must not be NULL");
  return guarded([&] {
    ds->data.add(label, frames_from(frames, length, ds->data.dim()));
    return GENHMM_OK;
  });
}

genhmm_status genhmm_dataset_load(const char* path, genhmm_dataset** out) {
  GENHMM_REQUIRE(path && out, "path and out must not be NULL");
  return guarded([&] {
    dataset_out(genhmm::data::load_dataset(path), out);
    return GENHMM_OK;
  });
}

genhmm_status genhmm_dataset_save(const genhmm_dataset* ds, const char* path) {
  GENHMM_REQUIRE(ds && path, "dataset and path must not be NULL");
  return guarded([&] {
    genhmm::data::save_dataset(ds->data, path);
    return GENHMM_OK;
  });
}

void genhmm_dataset_free(genhmm_dataset* ds) { delete ds; }

int genhmm_dataset_size(const genhmm_dataset* ds) { return ds ? static_cast<int>(ds->data.size()) : 0; }
int genhmm_dataset_dim(const genhmm_dataset* ds) { return ds ? ds->data.dim() : 0; }
int genhmm_dataset_num_classes(const genhmm_dataset* ds) {
  return ds ? static_cast<int>(ds->data.classes().size()) : 0;
}

const char* genhmm_dataset_class_name(const genhmm_dataset* ds, int class_index) {
  if (!ds || class_index < 0 || class_index >= static_cast<int>(ds->data.classes().size())) return nullptr;
  return ds->data.classes()[static_cast<std::size_t>(class_index)].c_str();
}

int genhmm_dataset_class_index(const genhmm_dataset* ds, const char* label) {
  if (!ds || !label) return -1;
  return ds->data.class_index(label);
}

genhmm_status genhmm_dataset_item(const genhmm_dataset* ds, int index, int* class_index, int* length,
                                  const double** frames) {
  GENHMM_REQUIRE(ds, "dataset must not be NULL");
  GENHMM_REQUIRE(index >= 0 && index < static_cast<int>(ds->data.size()), "sequence index out of range");
  const auto& item = ds->data.items()[static_cast<std::size_t>(index)];
  if (class_index) *class_index = item.label;
  if (length) *length = static_cast<int>(item.frames.rows());
  if (frames) *frames = item.frames.data();
  return GENHMM_OK;
}

genhmm_status genhmm_dataset_filter_class(const genhmm_dataset* ds, int class_index, genhmm_dataset** out) {
  GENHMM_REQUIRE(ds && out, "dataset and out must not be NULL");
  GENHMM_REQUIRE(class_index >= 0 && class_index < static_cast<int>(ds->data.classes().size()),
                 "class index out of range");
  return guarded([&] {
    genhmm::data::SequenceDataset sub(ds->data.dim());
    const auto& name = ds->data.classes()[static_cast<std::size_t>(class_index)];
    for (const auto& item : ds->data.items())
      if (item.label == class_index) sub.add(name, item.frames);
    dataset_out(std::move(sub), out);
    return GENHMM_OK;
  });
}

genhmm_status genhmm_dataset_add_noise(const genhmm_dataset* ds, genhmm_noise_kind kind, double snr_db,
                                       uint64_t seed, genhmm_dataset** out) {
  GENHMM_REQUIRE(ds && out, "dataset and out must not be NULL");
  GENHMM_REQUIRE(kind == GENHMM_NOISE_WHITE || kind == GENHMM_NOISE_PINK, "unknown noise kind");
  return guarded([&] {
    const auto k = kind == GENHMM_NOISE_WHITE ? genhmm::data::NoiseKind::kWhite : genhmm::data::NoiseKind::kPink;
    dataset_out(genhmm::data::add_noise(ds->data, k, snr_db, seed), out);
    return GENHMM_OK;
  });
}

genhmm_status genhmm_dataset_standardize(const genhmm_dataset* fit_on, const genhmm_dataset* apply_to,
                                         genhmm_dataset** out) {
  GENHMM_REQUIRE(fit_on && apply_to && out, "datasets and out must not be NULL");
  return guarded([&] {
    const auto st = genhmm::data::Standardizer::fit(fit_on->data);
    dataset_out(st.apply(apply_to->data), out);
    return GENHMM_OK;
  });
}

genhmm_synthetic_params genhmm_synthetic_params_default(void) {
  const genhmm::data::PresetOptions o;
  genhmm_synthetic_params p;
  p.preset = GENHMM_SYNTH_SEPARATED;
  p.classes = o.classes;
  p.dim = o.dim;
  p.states = o.states;
  p.components = o.components;
  p.train_per_class = o.train_per_class;
  p.test_per_class = o.test_per_class;
  p.min_length = o.min_length;
  p.max_length = o.max_length;
  p.seed = o.seed;
  return p;
}

genhmm_status genhmm_dataset_synthetic(const genhmm_synthetic_params* params, genhmm_dataset** train,
                                       genhmm_dataset** test) {
  GENHMM_REQUIRE(params && train && test, "params, train and test must not be NULL");
  GENHMM_REQUIRE(params->preset >= GENHMM_SYNTH_SEPARATED && params->preset <= GENHMM_SYNTH_MULTIMODAL,
                 "unknown synthetic preset");
  return guarded([&] {
    genhmm::data::PresetOptions o;
    o.classes = params->classes;
    o.dim = params->dim;
    o.states = params->states;
    o.components = params->components;
    o.train_per_class = params->train_per_class;
    o.test_per_class = params->test_per_class;
    o.min_length = params->min_length;
    o.max_length = params->max_length;
    o.seed = params->seed;
    auto split = genhmm::data::make_synthetic(
        genhmm::data::make_preset(static_cast<genhmm::data::SyntheticPreset>(params->preset), o));
    dataset_out(std::move(split.train), train);
    dataset_out(std::move(split.test), test);
    return GENHMM_OK;
  });
}

genhmm_train_config genhmm_train_config_default(void) {
  const genhmm::TrainConfig t;
  const genhmm::flow::FlowConfig f;
  genhmm_train_config c;
  c.model_type = GENHMM_MODEL_FLOW;
  c.num_components = 3;
  c.flow_blocks = f.blocks;
  c.hidden_width = f.hidden_width;
  c.frames_per_state = 3;
  c.num_states = 0;
  c.learning_rate = t.adam.learning_rate;
  c.batch_size = t.batch_size;
  c.inner_batches = t.inner_batches;
  c.max_iterations = t.max_iterations;
  c.tolerance = t.tolerance;
  c.seed = t.seed;
  c.threads = t.threads;
  return c;
}

genhmm_status genhmm_model_create(const genhmm_train_config* config, const char* label, const genhmm_dataset* data,
                                  genhmm_model** out) {
  GENHMM_REQUIRE(config && label && data && out, "config, label, data and out must not be NULL");
  return guarded([&] {
    validate_config(*config);
    if (data->data.empty()) throw genhmm::DataError("cannot create a model from an empty dataset");
    const auto seqs = all_sequences(data->data);
    int states = config->num_states;
    if (states == 0) {
      double frames = 0.0;
      for (const auto& s : seqs) frames += static_cast<double>(s.rows());
      states = genhmm::heuristic_state_count(frames / static_cast<double>(seqs.size()), config->frames_per_state);
    }
    std::mt19937_64 rng(config->seed);
    const auto tc = core_config(*config);
    auto handle = std::make_unique<genhmm_model>();
    if (config->model_type == GENHMM_MODEL_FLOW) {
      genhmm::flow::FlowConfig fc;
      fc.dim = data->data.dim();
      fc.blocks = config->flow_blocks;
      fc.hidden_width = config->hidden_width;
      auto m = genhmm::GenHmmModel::initialize(label, states, config->num_components, fc, rng);
      handle->state = genhmm::make_train_state(m, tc);
      handle->model = std::move(m);
    } else {
      auto m = genhmm::baseline::GmmHmmModel::initialize(label, states, config->num_components, seqs, rng);
      handle->state = genhmm::baseline::make_train_state(m, tc);
      handle->model = std::move(m);
    }
    *out = handle.release();
    return GENHMM_OK;
  });
}

void genhmm_model_free(genhmm_model* model) { delete model; }

genhmm_status genhmm_model_em_step(genhmm_model* model, const genhmm_dataset* data, double* loglik) {
  GENHMM_REQUIRE(model && data, "model and data must not be NULL");
  return guarded([&] {
    const auto seqs = all_sequences(data->data);
    const double ll = std::visit(
        [&](auto& m) -> double {
          using M = std::decay_t<decltype(m)>;
          if (m.dim() != data->data.dim()) throw genhmm::ShapeError("model and data frame dimensions differ");
          if constexpr (std::is_same_v<M, genhmm::GenHmmModel>)
            return genhmm::em_step(m, seqs, model->state);
          else
            return genhmm::baseline::gmm_em_step(m, seqs, model->state);
        },
        model->model);
    if (loglik) *loglik = ll;
    return GENHMM_OK;
  });
}

genhmm_status genhmm_model_train(genhmm_model* model, const genhmm_dataset* data, genhmm_progress_fn progress,
                                 void* user) {
  GENHMM_REQUIRE(model && data, "model and data must not be NULL");
  auto& st = model->state;
  while (!st.converged && st.iteration < st.config.max_iterations) {
    double ll = 0.0;
    const genhmm_status s = genhmm_model_em_step(model, data, &ll);
    if (s != GENHMM_OK) return s;
    if (progress && progress(model, st.iteration, ll, user) != 0) break;
  }
  return GENHMM_OK;
}

genhmm_status genhmm_model_set_limits(genhmm_model* model, int max_iterations, int threads) {
  GENHMM_REQUIRE(model, "model must not be NULL");
  if (max_iterations > 0) model->state.config.max_iterations = max_iterations;
  if (threads > 0) model->state.config.threads = threads;
  return GENHMM_OK;
}

genhmm_status genhmm_model_save(const genhmm_model* model, const char* path, int include_train_state) {
  GENHMM_REQUIRE(model && path, "model and path must not be NULL");
  return guarded([&] {
    genhmm::io::Checkpoint cp{model->model, std::nullopt};
    if (include_train_state) cp.train_state = model->state;
    genhmm::io::save_checkpoint(path, cp);
    return GENHMM_OK;
  });
}

genhmm_status genhmm_model_load(const char* path, genhmm_model** out) {
  GENHMM_REQUIRE(path && out, "path and out must not be NULL");
  return guarded([&] {
    auto cp = genhmm::io::load_checkpoint(path);
    auto handle = std::make_unique<genhmm_model>();
    if (cp.train_state) {
      handle->state = std::move(*cp.train_state);
    } else {
      handle->state = std::visit(
          [](const auto& m) {
            using M = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<M, genhmm::GenHmmModel>)
              return genhmm::make_train_state(m, genhmm::TrainConfig{});
            else
              return genhmm::baseline::make_train_state(m, genhmm::TrainConfig{});
          },
          cp.model);
    }
    handle->model = std::move(cp.model);
    *out = handle.release();
    return GENHMM_OK;
  });
}

const char* genhmm_model_label(const genhmm_model* model) {
  if (!model) return nullptr;
  return std::visit([](const auto& m) { return m.label.c_str(); }, model->model);
}

genhmm_model_type genhmm_model_kind(const genhmm_model* model) {
  return model && std::holds_alternative<genhmm::baseline::GmmHmmModel>(model->model) ? GENHMM_MODEL_GMM
                                                                                       : GENHMM_MODEL_FLOW;
}

genhmm_status genhmm_model_shape(const genhmm_model* model, int* states, int* components, int* dim) {
  GENHMM_REQUIRE(model, "model must not be NULL");
  std::visit(
      [&](const auto& m) {
        if (states) *states = m.num_states();
        if (components) *components = m.num_components();
        if (dim) *dim = m.dim();
      },
      model->model);
  return GENHMM_OK;
}

int genhmm_model_iteration(const genhmm_model* model) { return model ? model->state.iteration : 0; }
int genhmm_model_converged(const genhmm_model* model) { return model && model->state.converged ? 1 : 0; }
int genhmm_model_monotonicity_violations(const genhmm_model* model) {
  return model ? model->state.monotonicity_violations : 0;
}
double genhmm_model_initial_loglik(const genhmm_model* model) {
  return model ? model->state.initial_loglik : std::numeric_limits<double>::quiet_NaN();
}

genhmm_status genhmm_model_history(const genhmm_model* model, const double** values, int* count) {
  GENHMM_REQUIRE(model && values && count, "model, values and count must not be NULL");
  *values = model->state.history.data();
  *count = static_cast<int>(model->state.history.size());
  return GENHMM_OK;
}

genhmm_status genhmm_model_sequence_loglik(const genhmm_model* model, const double* frames, int length, int dim,
                                           double* loglik, int* degenerate) {
  GENHMM_REQUIRE(model && frames && loglik, "model, frames and loglik must not be NULL");
  return guarded([&] {
    const Frames seq = frames_from(frames, length, dim);
    const auto score = std::visit(
        [&](const auto& m) {
          using M = std::decay_t<decltype(m)>;
          if (m.dim() != dim) throw genhmm::ShapeError("model and sequence frame dimensions differ");
          if constexpr (std::is_same_v<M, genhmm::GenHmmModel>)
            return genhmm::sequence_loglik(m, seq);
          else
            return genhmm::baseline::sequence_loglik(m, seq);
        },
        model->model);
    *loglik = score.degenerate ? -std::numeric_limits<double>::infinity() : score.loglik;
    if (degenerate) *degenerate = score.degenerate ? 1 : 0;
    return GENHMM_OK;
  });
}

genhmm_status genhmm_classify(const genhmm_model* const* models, int count, const double* frames, int length,
                              int dim, int per_frame, int* index, double* scores) {
  GENHMM_REQUIRE(models && count > 0 && frames && index, "models, frames and index must not be NULL");
  for (int i = 0; i < count; ++i) GENHMM_REQUIRE(models[i], "model handles must not be NULL");
  const auto kind = genhmm_model_kind(models[0]);
  for (int i = 1; i < count; ++i)
    GENHMM_REQUIRE(genhmm_model_kind(models[i]) == kind, "models must share one model type");
  return guarded([&] {
    const Frames seq = frames_from(frames, length, dim);
    std::vector<double> all(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) {
      const auto score = std::visit(
          [&](const auto& m) {
            using M = std::decay_t<decltype(m)>;
            if (m.dim() != dim) throw genhmm::ShapeError("model and sequence frame dimensions differ");
            if constexpr (std::is_same_v<M, genhmm::GenHmmModel>)
              return genhmm::sequence_loglik(m, seq);
            else
              return genhmm::baseline::sequence_loglik(m, seq);
          },
          models[i]->model);
      double v = score.degenerate ? -std::numeric_limits<double>::infinity() : score.loglik;
      if (per_frame && std::isfinite(v)) v /= static_cast<double>(length);
      all[static_cast<std::size_t>(i)] = v;
    }
    *index = genhmm::argmax_class(all);
    if (scores) std::copy(all.begin(), all.end(), scores);
    return GENHMM_OK;
  });
}

}  // extern "C"
