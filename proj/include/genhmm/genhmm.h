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

/* C interface to the GenHMM library. All functions returning genhmm_status
 * leave a thread-local message in genhmm_last_error() on failure. Handles
 * are opaque and owned by the caller once returned. */
#ifndef GENHMM_GENHMM_H_
#define GENHMM_GENHMM_H_

#include <stddef.h>
#include <stdint.h>

#if defined(GENHMM_BUILDING_LIBRARY)
#define GENHMM_API __attribute__((visibility("default")))
#else
#define GENHMM_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

#define GENHMM_API_VERSION 1

typedef enum genhmm_status {
  GENHMM_OK = 0,
  GENHMM_ERR_INVALID_ARGUMENT = 1,
  GENHMM_ERR_CONFIG = 2,
  GENHMM_ERR_DATA = 3,
  GENHMM_ERR_IO = 4,
  GENHMM_ERR_NUMERICAL = 5,
  GENHMM_ERR_SHAPE = 6,
  GENHMM_ERR_INTERNAL = 7
} genhmm_status;

typedef enum genhmm_model_type {
  GENHMM_MODEL_FLOW = 0,
  GENHMM_MODEL_GMM = 1
} genhmm_model_type;

typedef enum genhmm_noise_kind {
  GENHMM_NOISE_WHITE = 0,
  GENHMM_NOISE_PINK = 1
} genhmm_noise_kind;

typedef enum genhmm_synthetic_preset {
  GENHMM_SYNTH_SEPARATED = 0,
  GENHMM_SYNTH_WARPED = 1,
  GENHMM_SYNTH_MULTIMODAL = 2
} genhmm_synthetic_preset;

typedef enum genhmm_log_level {
  GENHMM_LOG_INFO = 0,
  GENHMM_LOG_WARNING = 1
} genhmm_log_level;

typedef struct genhmm_dataset genhmm_dataset;
typedef struct genhmm_model genhmm_model;

GENHMM_API int genhmm_api_version(void);
GENHMM_API const char* genhmm_status_string(genhmm_status status);
/* Message of the last failing call on this thread; "" when none. */
GENHMM_API const char* genhmm_last_error(void);

/* Library diagnostics (warnings about degenerate sequences, rejected steps,
 * likelihood decreases). NULL restores the silent default. */
typedef void (*genhmm_log_fn)(genhmm_log_level level, const char* message, void* user);
GENHMM_API void genhmm_set_log_callback(genhmm_log_fn fn, void* user);

/* ---- datasets ---------------------------------------------------------- */

GENHMM_API genhmm_status genhmm_dataset_create(int dim, genhmm_dataset** out);
/* frames: length x dim values, row-major. */
GENHMM_API genhmm_status genhmm_dataset_add(genhmm_dataset* ds, const char* label,
                                            const double* frames, int length);
/* Text format, gzip-compressed when the path ends in ".gz". */
GENHMM_API genhmm_status genhmm_dataset_load(const char* path, genhmm_dataset** out);
GENHMM_API genhmm_status genhmm_dataset_save(const genhmm_dataset* ds, const char* path);
GENHMM_API void genhmm_dataset_free(genhmm_dataset* ds);

GENHMM_API int genhmm_dataset_size(const genhmm_dataset* ds);
GENHMM_API int genhmm_dataset_dim(const genhmm_dataset* ds);
GENHMM_API int genhmm_dataset_num_classes(const genhmm_dataset* ds);
/* NULL when out of range. Valid until the dataset is modified or freed. */
GENHMM_API const char* genhmm_dataset_class_name(const genhmm_dataset* ds, int class_index);
/* -1 when the label is unknown. */
GENHMM_API int genhmm_dataset_class_index(const genhmm_dataset* ds, const char* label);
/* Class index, length and a row-major frame pointer of sequence i. */
GENHMM_API genhmm_status genhmm_dataset_item(const genhmm_dataset* ds, int index, int* class_index,
                                             int* length, const double** frames);

/* New dataset holding only sequences of one class. */
GENHMM_API genhmm_status genhmm_dataset_filter_class(const genhmm_dataset* ds, int class_index,
                                                     genhmm_dataset** out);
/* New dataset with additive noise at snr_db per sequence. snr_db = +inf
 * copies the input unchanged. */
GENHMM_API genhmm_status genhmm_dataset_add_noise(const genhmm_dataset* ds, genhmm_noise_kind kind,
                                                  double snr_db, uint64_t seed,
                                                  genhmm_dataset** out);
/* Standardizes `apply_to` with per-dimension statistics of `fit_on`. */
GENHMM_API genhmm_status genhmm_dataset_standardize(const genhmm_dataset* fit_on,
                                                    const genhmm_dataset* apply_to,
                                                    genhmm_dataset** out);

typedef struct genhmm_synthetic_params {
  genhmm_synthetic_preset preset;
  int classes;
  int dim;
  int states;
  int components;
  int train_per_class;
  int test_per_class;
  int min_length;
  int max_length;
  uint64_t seed;
} genhmm_synthetic_params;

GENHMM_API genhmm_synthetic_params genhmm_synthetic_params_default(void);
GENHMM_API genhmm_status genhmm_dataset_synthetic(const genhmm_synthetic_params* params,
                                                  genhmm_dataset** train, genhmm_dataset** test);

/* ---- models ------------------------------------------------------------ */

typedef struct genhmm_train_config {
  genhmm_model_type model_type;
  int num_components;    /* K */
  int flow_blocks;
  int hidden_width;
  int frames_per_state;  /* state-count heuristic divisor */
  int num_states;        /* 0: derived from the mean sequence length */
  double learning_rate;
  int batch_size;        /* 0: every sequence */
  int inner_batches;
  int max_iterations;
  double tolerance;
  uint64_t seed;
  int threads;
} genhmm_train_config;

GENHMM_API genhmm_train_config genhmm_train_config_default(void);

/* Initializes an untrained model for the sequences in `data` (every class
 * in it is treated as one training set). */
GENHMM_API genhmm_status genhmm_model_create(const genhmm_train_config* config, const char* label,
                                             const genhmm_dataset* data, genhmm_model** out);
GENHMM_API void genhmm_model_free(genhmm_model* model);

/* Called after each EM iteration; a nonzero return stops training. */
typedef int (*genhmm_progress_fn)(const genhmm_model* model, int iteration, double loglik,
                                  void* user);

/* Runs EM until convergence or max_iterations, resuming from the model's
 * current iteration. */
GENHMM_API genhmm_status genhmm_model_train(genhmm_model* model, const genhmm_dataset* data,
                                            genhmm_progress_fn progress, void* user);
GENHMM_API genhmm_status genhmm_model_em_step(genhmm_model* model, const genhmm_dataset* data,
                                              double* loglik);
/* Overrides run limits, e.g. after loading a checkpoint. Values <= 0 keep
 * the stored setting. */
GENHMM_API genhmm_status genhmm_model_set_limits(genhmm_model* model, int max_iterations,
                                                 int threads);

/* include_train_state != 0 stores optimizer state and history for resume. */
GENHMM_API genhmm_status genhmm_model_save(const genhmm_model* model, const char* path,
                                           int include_train_state);
GENHMM_API genhmm_status genhmm_model_load(const char* path, genhmm_model** out);

GENHMM_API const char* genhmm_model_label(const genhmm_model* model);
GENHMM_API genhmm_model_type genhmm_model_kind(const genhmm_model* model);
GENHMM_API genhmm_status genhmm_model_shape(const genhmm_model* model, int* states,
                                            int* components, int* dim);
GENHMM_API int genhmm_model_iteration(const genhmm_model* model);
GENHMM_API int genhmm_model_converged(const genhmm_model* model);
GENHMM_API int genhmm_model_monotonicity_violations(const genhmm_model* model);
/* Average per-frame log-likelihood before training (NaN if never trained). */
GENHMM_API double genhmm_model_initial_loglik(const genhmm_model* model);
/* history[i]: average per-frame log-likelihood after EM iteration i. Valid
 * until the model is trained further or freed. */
GENHMM_API genhmm_status genhmm_model_history(const genhmm_model* model, const double** values,
                                              int* count);

/* log p(frames). degenerate (optional) is set when no state path can emit
 * the sequence, in which case loglik is -inf. */
GENHMM_API genhmm_status genhmm_model_sequence_loglik(const genhmm_model* model,
                                                      const double* frames, int length, int dim,
                                                      double* loglik, int* degenerate);

/* Index of the best-scoring model, -1 when every score is -inf. scores
 * (optional) receives `count` values. All models must share one type and
 * frame dimension. */
GENHMM_API genhmm_status genhmm_classify(const genhmm_model* const* models, int count,
                                         const double* frames, int length, int dim, int per_frame,
                                         int* index, double* scores);

#ifdef __cplusplus
}
#endif

#endif /* GENHMM_GENHMM_H_ */
