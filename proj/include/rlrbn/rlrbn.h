/*
 * Copyright 2026 The RL-RBN Authors.
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

/*
 * C interface to the rlrbn library.
 *
 * Every fallible call returns an rlrbn_status. On failure the message is
 * available from rlrbn_last_error() on the same thread until the next call.
 * Handles are opaque and owned by the caller; release them with the
 * matching _free function. Strings returned through char** are released
 * with rlrbn_string_free.
 */

#ifndef RLRBN_RLRBN_H_
#define RLRBN_RLRBN_H_

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(_WIN32)
#define RLRBN_API __declspec(dllexport)
#else
#define RLRBN_API __attribute__((visibility("default")))
#endif

typedef enum rlrbn_status {
  RLRBN_OK = 0,
  RLRBN_ERR_CONFIG = 1,
  RLRBN_ERR_NUMERIC_DOMAIN = 2,
  RLRBN_ERR_INSUFFICIENT_IDENTITIES = 3,
  RLRBN_ERR_TRAINING_DIVERGED = 4,
  RLRBN_ERR_DEGENERATE_SER = 5,
  RLRBN_ERR_IO = 6,
  RLRBN_ERR_MISSING_ARTIFACT = 7,
  RLRBN_ERR_INVALID_ARGUMENT = 8,
  RLRBN_ERR_INTERNAL = 99
} rlrbn_status;

typedef struct rlrbn_config rlrbn_config;
typedef struct rlrbn_dataset rlrbn_dataset;

/* Receives one progress line; `user` is passed through unchanged. */
typedef void (*rlrbn_log_fn)(const char* line, void* user);

RLRBN_API const char* rlrbn_version(void);
/* Short lowercase name such as "config" or "missing_artifact". */
RLRBN_API const char* rlrbn_status_name(rlrbn_status status);
RLRBN_API const char* rlrbn_last_error(void);
/* Pipeline stage that failed in the last call, or "" when not a stage failure. */
RLRBN_API const char* rlrbn_last_error_stage(void);
RLRBN_API void rlrbn_string_free(char* s);

/* Configuration. `overrides` holds n "dotted.key=value" assignments; path
 * may be NULL for the built-in defaults. */
RLRBN_API rlrbn_status rlrbn_config_default(rlrbn_config** out);
RLRBN_API rlrbn_status rlrbn_config_load(const char* path, const char* const* overrides,
                                         size_t n, rlrbn_config** out);
RLRBN_API rlrbn_status rlrbn_config_set(rlrbn_config* cfg, const char* assignment);
RLRBN_API rlrbn_status rlrbn_config_to_json(const rlrbn_config* cfg, char** out);
RLRBN_API void rlrbn_config_free(rlrbn_config* cfg);
/* Directory of one seed's run: <output_dir>/seed-<seed>. */
RLRBN_API rlrbn_status rlrbn_seed_dir(const rlrbn_config* cfg, uint64_t seed, char** out);

/* Pipeline. Stage names: gen-data, split, pairs, warmup, sample, train-dqn,
 * dump-policy, train, evaluate, report. A NULL run_dir means the seed's
 * directory under the configured output_dir. */
RLRBN_API rlrbn_status rlrbn_run_experiment(const rlrbn_config* cfg, rlrbn_log_fn log,
                                            void* user);
RLRBN_API rlrbn_status rlrbn_run_seed(const rlrbn_config* cfg, uint64_t seed,
                                      const char* run_dir, rlrbn_log_fn log, void* user);
RLRBN_API rlrbn_status rlrbn_run_stage(const rlrbn_config* cfg, uint64_t seed,
                                       const char* run_dir, const char* stage,
                                       rlrbn_log_fn log, void* user);
/* Rebuilds <output_dir>/report.csv and summary.json from finished seeds. */
RLRBN_API rlrbn_status rlrbn_write_report(const rlrbn_config* cfg, rlrbn_log_fn log, void* user);
RLRBN_API rlrbn_status rlrbn_sweep(const rlrbn_config* cfg, rlrbn_log_fn log, void* user);

/* Runs the oracle and property checks; one line per check goes to `log`.
 * *n_failed receives the number of failing checks. */
RLRBN_API rlrbn_status rlrbn_selftest(uint64_t seed, rlrbn_log_fn log, void* user, int* n_failed);

/* STD (percent) and SER of per-group accuracies in [0, 1]. When some group
 * has zero error, *std_out is still set and RLRBN_ERR_DEGENERATE_SER is
 * returned. */
RLRBN_API rlrbn_status rlrbn_std_ser(const double* accuracies, size_t n, double* std_out,
                                     double* ser_out);

/* Datasets in the library's text format. */
RLRBN_API rlrbn_status rlrbn_dataset_load(const char* path, rlrbn_dataset** out);
RLRBN_API rlrbn_status rlrbn_dataset_info(const rlrbn_dataset* ds, int* n_samples,
                                          int* n_identities, int* n_groups, int* d_in);
/* Identities per group; `counts` must hold n_groups entries. */
RLRBN_API rlrbn_status rlrbn_dataset_group_sizes(const rlrbn_dataset* ds, int* counts);
RLRBN_API void rlrbn_dataset_free(rlrbn_dataset* ds);

#ifdef __cplusplus
}
#endif

#endif /* RLRBN_RLRBN_H_ */
