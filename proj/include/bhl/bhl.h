/*
Copyright 2026 The bhlineage Authors
Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

                http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
*/

#ifndef BHL_BHL_H
#define BHL_BHL_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#if defined(BHL_BUILDING_LIBRARY)
#define BHL_API __declspec(dllexport)
#else
#define BHL_API __declspec(dllimport)
#endif
#else
#define BHL_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum bhl_status {
  BHL_OK = 0,
  BHL_ERR_CONFIG = 2,
  BHL_ERR_NUMERICS = 3,
  BHL_ERR_DOMAIN = 4,
  BHL_ERR_CAPACITY = 5,
  BHL_ERR_IO = 6,
  BHL_ERR_INVALID_ARGUMENT = 7,
  BHL_ERR_INTERNAL = 8
} bhl_status;

/* Message of the last failing call on this thread; never NULL. */
BHL_API const char* bhl_last_error(void);
BHL_API const char* bhl_status_name(bhl_status status);
BHL_API const char* bhl_version(void);
/* Frees strings returned through char** out-parameters. */
BHL_API void bhl_string_free(char* s);

/* Experiment configuration. */
typedef struct bhl_config bhl_config;
BHL_API bhl_status bhl_config_parse(const char* json, bhl_config** out);
BHL_API bhl_status bhl_config_load(const char* path, bhl_config** out);
BHL_API void bhl_config_free(bhl_config* cfg);
BHL_API bhl_status bhl_config_set_seed(bhl_config* cfg, uint64_t seed);
BHL_API bhl_status bhl_config_set_output_dir(bhl_config* cfg, const char* dir);
BHL_API bhl_status bhl_config_to_json(const bhl_config* cfg, char** out);

/* Runs; artifacts go to the configured output directory. threads <= 0 means 1. */
BHL_API bhl_status bhl_run_genfun(const bhl_config* cfg);
BHL_API bhl_status bhl_run_simulate(const bhl_config* cfg, int threads);
BHL_API bhl_status bhl_run_predict(const bhl_config* cfg);
/* *passed is 1 when every comparison test passes. */
BHL_API bhl_status bhl_run_compare(const bhl_config* cfg, int threads, int* passed);
BHL_API bhl_status bhl_run_enumerate(const bhl_config* cfg);

/* Acceptance suite. *report receives one line per criterion
   ("AC-n PASS|FAIL seconds detail"); free it with bhl_string_free. */
BHL_API bhl_status bhl_selftest(const char* out_dir, uint64_t seed, int threads, int* passed, char** report);

/* Offspring law. */
typedef struct bhl_offspring bhl_offspring;
BHL_API bhl_status bhl_offspring_new(const double* probs, size_t n, bhl_offspring** out);
BHL_API void bhl_offspring_free(bhl_offspring* d);
BHL_API bhl_status bhl_offspring_pgf(const bhl_offspring* d, double s, double* out);
BHL_API bhl_status bhl_offspring_pgf_derivative(const bhl_offspring* d, double s, double* out);
BHL_API double bhl_offspring_mean(const bhl_offspring* d);

/* Lifetime law. */
typedef struct bhl_lifetime bhl_lifetime;
BHL_API bhl_status bhl_lifetime_exponential(double rate, bhl_lifetime** out);
BHL_API bhl_status bhl_lifetime_deterministic(double value, bhl_lifetime** out);
BHL_API bhl_status bhl_lifetime_gamma(double shape, double scale, bhl_lifetime** out);
BHL_API void bhl_lifetime_free(bhl_lifetime* law);
BHL_API bhl_status bhl_lifetime_tail(const bhl_lifetime* law, double t, double* out);

/* Generating function table F_t(s) = E[s^N_t]. steps/s_points <= 0 use defaults. */
typedef struct bhl_genfun bhl_genfun;
BHL_API bhl_status bhl_genfun_build(const bhl_offspring* d, const bhl_lifetime* law, double horizon, int steps,
                                    int s_points, bhl_genfun** out);
BHL_API void bhl_genfun_free(bhl_genfun* table);
BHL_API bhl_status bhl_genfun_eval(const bhl_genfun* table, double t, double s, double* out);
BHL_API bhl_status bhl_genfun_eval_deriv(const bhl_genfun* table, double t, double s, double* out);
BHL_API bhl_status bhl_genfun_extinction(const bhl_genfun* table, double t, double* out);
BHL_API bhl_status bhl_rate_bias(const bhl_genfun* table, double t, int ell, double* out);
BHL_API bhl_status bhl_s_density(const bhl_genfun* table, double s, double* out);

#ifdef __cplusplus
}
#endif

#endif
