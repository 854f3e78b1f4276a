/*
 * Copyright 2026 The GenHMM Authors. All Rights Reserved.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

/* Exercises the public header from plain C. */
#include <math.h>
#include <stdio.h>

#include "genhmm/genhmm.h"

#define EXPECT(cond)                                         \
  do {                                                       \
    if (!(cond)) {                                           \
      fprintf(stderr, "%s:%d: %s\n", __FILE__, __LINE__, #cond); \
      return 1;                                              \
    }                                                        \
  } while (0)

int main(void) {
  genhmm_dataset* ds = NULL;
  genhmm_model* model = NULL;
  genhmm_train_config cfg = genhmm_train_config_default();
  const double frames[] = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8};
  double ll = 0.0;
  int degenerate = 1;
  int index = -2;
  double score = 0.0;
  const genhmm_model* models[1];

  EXPECT(genhmm_api_version() >= 1);
  EXPECT(genhmm_dataset_create(2, &ds) == GENHMM_OK);
  EXPECT(genhmm_dataset_add(ds, "a", frames, 4) == GENHMM_OK);
  EXPECT(genhmm_dataset_add(ds, "a", frames + 2, 3) == GENHMM_OK);
  EXPECT(genhmm_dataset_add(NULL, "a", frames, 4) == GENHMM_ERR_INVALID_ARGUMENT);

  cfg.model_type = GENHMM_MODEL_GMM;
  cfg.num_components = 1;
  cfg.max_iterations = 2;
  EXPECT(genhmm_model_create(&cfg, "a", ds, &model) == GENHMM_OK);
  EXPECT(genhmm_model_train(model, ds, NULL, NULL) == GENHMM_OK);
  EXPECT(genhmm_model_iteration(model) == 2);
  EXPECT(genhmm_model_sequence_loglik(model, frames, 4, 2, &ll, &degenerate) == GENHMM_OK);
  EXPECT(isfinite(ll) && degenerate == 0);
  models[0] = model;
  EXPECT(genhmm_classify(models, 1, frames, 4, 2, 0, &index, &score) == GENHMM_OK);
  EXPECT(index == 0 && score == ll);

  genhmm_model_free(model);
  genhmm_dataset_free(ds);
  puts("c smoke ok");
  return 0;
}
