/* Copyright 2026 The markovbsde Authors
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *     https://www.apache.org/licenses/LICENSE-2.0
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 */

#ifndef MARKOVBSDE_H_
#define MARKOVBSDE_H_

#include <stddef.h>
#include <stdint.h>

#if defined(MBSDE_BUILDING_LIBRARY)
#define MBSDE_API __attribute__((visibility("default")))
#else
#define MBSDE_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum {
  MBSDE_OK = 0,
  MBSDE_ERR_ARGUMENT = 1,
  MBSDE_ERR_CONFIG = 2,
  MBSDE_ERR_NUMERIC = 3,
  MBSDE_ERR_IO = 4,
  MBSDE_ERR_INTERNAL = 5
} mbsde_status;

typedef struct mbsde_grid mbsde_grid;
typedef struct mbsde_generator mbsde_generator;
typedef struct mbsde_trajectory mbsde_trajectory;
typedef struct mbsde_table mbsde_table;

/* Message of the last failure on the calling thread; empty after success. */
MBSDE_API const char* mbsde_last_error(void);
MBSDE_API const char* mbsde_version(void);

/* 1-D grids with 2 * half_count + 1 nodes. */
MBSDE_API mbsde_status mbsde_grid_uniform(double left, double center, double right,
                                          int half_count, mbsde_grid** out);
MBSDE_API mbsde_status mbsde_grid_tavella_randall(double left, double center,
                                                  double right, int half_count,
                                                  double g1, double g2,
                                                  mbsde_grid** out);
MBSDE_API mbsde_status mbsde_grid_concat(const mbsde_grid* a, const mbsde_grid* b,
                                         mbsde_grid** out);
MBSDE_API size_t mbsde_grid_size(const mbsde_grid* g);
/* Copies min(capacity, size) nodes. */
MBSDE_API mbsde_status mbsde_grid_nodes(const mbsde_grid* g, double* out, size_t capacity);
MBSDE_API void mbsde_grid_free(mbsde_grid* g);

typedef double (*mbsde_scalar_fn)(double x, void* user);
/* out[d] = drift(x[d]). */
typedef void (*mbsde_drift_fn)(const double* x, double* out, void* user);
/* out[d * d], row-major sigma(x). */
typedef void (*mbsde_diffusion_fn)(const double* x, double* out, void* user);
/* PDE-convention driver f(t, x, y, z). */
typedef double (*mbsde_driver_fn)(double t, const double* x, double y,
                                  const double* z, void* user);

/* The callbacks and user pointer must stay valid while the generator is used. */
MBSDE_API mbsde_status mbsde_generator_build_1d(const mbsde_grid* grid,
                                                mbsde_scalar_fn mu,
                                                mbsde_scalar_fn sigma, void* user,
                                                mbsde_generator** out);
/* Tensor grid from `dim` axes, last axis varying fastest. */
MBSDE_API mbsde_status mbsde_generator_build_nd(const mbsde_grid* const* axes, size_t dim,
                                                mbsde_drift_fn drift,
                                                mbsde_diffusion_fn diffusion,
                                                void* user, mbsde_generator** out);
MBSDE_API size_t mbsde_generator_states(const mbsde_generator* g);
MBSDE_API size_t mbsde_generator_nonzeros(const mbsde_generator* g);
/* Writes 1 to *valid when every off-diagonal entry is >= 0 and rows sum to 0. */
MBSDE_API mbsde_status mbsde_generator_check(const mbsde_generator* g, int* valid,
                                             size_t* violations);
/* Node coordinates of state i (dim values). */
MBSDE_API mbsde_status mbsde_generator_point(const mbsde_generator* g, size_t i,
                                             double* out);
MBSDE_API void mbsde_generator_free(mbsde_generator* g);

/* Solves dU/dt + QU + F(t, U) = 0, U_T = terminal, backwards on n_steps
 * uniform steps. driver may be NULL (F == 0). */
MBSDE_API mbsde_status mbsde_solve(const mbsde_generator* g, const char* scheme,
                                   const double* terminal, size_t n, double horizon,
                                   int n_steps, int krylov_m, mbsde_driver_fn driver,
                                   void* driver_user, mbsde_trajectory** out);
MBSDE_API size_t mbsde_trajectory_steps(const mbsde_trajectory* t);
MBSDE_API double mbsde_trajectory_time(const mbsde_trajectory* t, size_t k);
MBSDE_API mbsde_status mbsde_trajectory_values(const mbsde_trajectory* t, size_t k,
                                               double* out, size_t capacity);
MBSDE_API void mbsde_trajectory_free(mbsde_trajectory* t);

/* Experiments. mode is "solve", "sparse", "lsmc" or "validate". The table
 * holds the CSV (or report) text. threads < 1 uses MBSDE_THREADS. */
MBSDE_API mbsde_status mbsde_experiment_run_file(const char* path, const char* mode,
                                                 int threads, int with_timing,
                                                 mbsde_table** out);
MBSDE_API mbsde_status mbsde_experiment_run_json(const char* json, const char* mode,
                                                 int threads, int with_timing,
                                                 mbsde_table** out);
/* Parses and validates a configuration without running it. */
MBSDE_API mbsde_status mbsde_config_check(const char* json);
/* Preset directory: MBSDE_PRESET_DIR if set, else the build-time default. */
MBSDE_API const char* mbsde_preset_dir(void);
/* Newline-separated preset names; dir may be NULL for the default. */
MBSDE_API mbsde_status mbsde_presets_list(const char* dir, mbsde_table** out);
MBSDE_API const char* mbsde_table_text(const mbsde_table* t);
/* 0 when the experiment reported a failure (validate: invalid generator). */
MBSDE_API int mbsde_table_ok(const mbsde_table* t);
/* Output path named in the configuration, or "". */
MBSDE_API const char* mbsde_table_output_path(const mbsde_table* t);
MBSDE_API void mbsde_table_free(mbsde_table* t);

#ifdef __cplusplus
}
#endif

#endif /* MARKOVBSDE_H_ */
