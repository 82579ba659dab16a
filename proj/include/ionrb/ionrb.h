/* Copyright 2026 The ionrb Authors
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

#ifndef IONRB_IONRB_H_
#define IONRB_IONRB_H_

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(_WIN32)
#define IONRB_API __declspec(dllexport)
#else
#define IONRB_API __attribute__((visibility("default")))
#endif

/* Every call returns one of these. Details of the most recent failure on the
 * calling thread are available from ionrb_last_error(). */
typedef enum ionrb_status {
  IONRB_OK = 0,
  IONRB_ERR_INVALID_ARGUMENT = 1, /* null handle, bad index, unknown name */
  IONRB_ERR_PARSE = 2,            /* text is not JSON */
  IONRB_ERR_CONFIG = 3,           /* JSON does not satisfy the schema */
  IONRB_ERR_RUNTIME = 4,          /* a pipeline stage failed */
  IONRB_ERR_NOT_CONVERGED = 5,    /* finished, but a calibration loop gave up */
  IONRB_ERR_INTERNAL = 6
} ionrb_status;

typedef enum ionrb_tier { IONRB_TIER_DEFAULT = 0, IONRB_TIER_FAST = 1, IONRB_TIER_FULL = 2 } ionrb_tier;

typedef struct ionrb_config ionrb_config;
typedef struct ionrb_result ionrb_result;

/* Overrides of the configuration; zero-initialise for none. */
typedef struct ionrb_run_options {
  int has_seed;
  uint64_t seed;
  ionrb_tier tier;
  int workers; /* 0 keeps the configured count */
} ionrb_run_options;

IONRB_API const char* ionrb_version(void);
IONRB_API const char* ionrb_status_name(ionrb_status status);
/* Message of the last failure on this thread, "" after success. */
IONRB_API const char* ionrb_last_error(void);

/* Subcommand names, index 0 .. ionrb_command_count() - 1. */
IONRB_API size_t ionrb_command_count(void);
IONRB_API const char* ionrb_command_name(size_t index);

/* Mean number of pi/2 pulses per Clifford of the decomposition table. */
IONRB_API double ionrb_pulses_per_clifford(void);

IONRB_API ionrb_status ionrb_config_parse(const char* json_text, ionrb_config** out);
IONRB_API void ionrb_config_free(ionrb_config* config);

/* Validates the configuration for `command` and writes the hash of its
 * effective form (16 hex digits plus terminator) into `hash_out`. */
IONRB_API ionrb_status ionrb_config_hash(const ionrb_config* config, const char* command,
                                         const ionrb_run_options* options, char hash_out[17]);

/* Runs a subcommand. On IONRB_OK and IONRB_ERR_NOT_CONVERGED `*out` holds
 * the result; otherwise it is set to NULL. */
IONRB_API ionrb_status ionrb_run(const char* command, const ionrb_config* config,
                                 const ionrb_run_options* options, ionrb_result** out);
IONRB_API void ionrb_result_free(ionrb_result* result);

IONRB_API size_t ionrb_result_file_count(const ionrb_result* result);
/* Borrowed pointers, valid until ionrb_result_free. */
IONRB_API const char* ionrb_result_file_name(const ionrb_result* result, size_t index);
IONRB_API const char* ionrb_result_file_data(const ionrb_result* result, size_t index,
                                             size_t* size);
/* Summary of the run as a JSON document. */
IONRB_API const char* ionrb_result_report(const ionrb_result* result);
IONRB_API const char* ionrb_result_config_hash(const ionrb_result* result);
IONRB_API uint64_t ionrb_result_seed(const ionrb_result* result);

#ifdef __cplusplus
}
#endif

#endif /* IONRB_IONRB_H_ */
