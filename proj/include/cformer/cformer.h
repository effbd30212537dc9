/* Copyright 2026 The Cformer Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License. */

#ifndef CFORMER_CFORMER_H_
#define CFORMER_CFORMER_H_

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define CFORMER_API __declspec(dllexport)
#else
#define CFORMER_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum cformer_status {
  CFORMER_OK = 0,
  CFORMER_E_INVALID_ARGUMENT = 1,
  CFORMER_E_IO = 2,
  CFORMER_E_PARSE = 3,
  CFORMER_E_MISSING_PREREQUISITE = 4,
  CFORMER_E_CONFIG_MISMATCH = 5,
  CFORMER_E_DATA = 6,
  CFORMER_E_INTERNAL = 7
} cformer_status;

/* Opaque experiment handle: a config plus an output directory. */
typedef struct cformer_experiment cformer_experiment;

CFORMER_API const char* cformer_version(void);

/* Stable lower-case identifier for a status, e.g. "missing_prerequisite". */
CFORMER_API const char* cformer_status_name(cformer_status status);

/* Message of the last failure on the calling thread; "" if none. */
CFORMER_API const char* cformer_last_error(void);

/* `config_path` may be NULL for the built-in defaults. */
CFORMER_API cformer_status cformer_experiment_create(const char* config_path,
                                                     cformer_experiment** out);
CFORMER_API void cformer_experiment_destroy(cformer_experiment* exp);

/* Dotted key ("trainer.lr_head"); the value is parsed as JSON, falling back
   to a plain string. */
CFORMER_API cformer_status cformer_experiment_set(cformer_experiment* exp,
                                                  const char* key,
                                                  const char* value);

/* Runs one stage: ingest, sweep, wordlist, pretrain, train, eval, report,
   compare, or "all". */
CFORMER_API cformer_status cformer_experiment_run(cformer_experiment* exp,
                                                  const char* stage);

/* Effective config as JSON. Release with cformer_string_free. */
CFORMER_API cformer_status cformer_experiment_config(const cformer_experiment* exp,
                                                     char** out_json);
CFORMER_API void cformer_string_free(char* s);

/* Writes the planted four-class benchmark corpus as JSONL. */
CFORMER_API cformer_status cformer_write_synthetic(const char* path,
                                                   size_t num_docs,
                                                   uint64_t seed);

/* l^(1/t) renormalised; `in` and `out` hold n values and may alias. */
CFORMER_API cformer_status cformer_sharpen(const double* in, size_t n, double t,
                                           double* out);

CFORMER_API cformer_status cformer_lambda_u(size_t step, size_t ramp_steps,
                                            double* out);

#ifdef __cplusplus
}
#endif

#endif  /* CFORMER_CFORMER_H_ */
