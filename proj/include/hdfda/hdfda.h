/*
 * Copyright 2026 The hdfda Authors
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
 * hdfda C API.
 *
 * Every fallible call returns an hdfda_status; on failure the message is
 * available from hdfda_last_error() on the same thread until the next call.
 * Strings returned through char** are owned by the caller and released with
 * hdfda_string_free(). Handles are released with their *_free function;
 * passing NULL to a free function is a no-op.
 */

#ifndef HDFDA_H
#define HDFDA_H

#include <stddef.h>

#if defined(_WIN32)
#define HDFDA_API __declspec(dllexport)
#else
#define HDFDA_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum hdfda_status {
    HDFDA_OK = 0,
    HDFDA_ERR_VALIDATION = 1,
    HDFDA_ERR_IO = 2,
    HDFDA_ERR_INTERNAL = 3
} hdfda_status;

typedef struct hdfda_observations hdfda_observations;
typedef struct hdfda_truth hdfda_truth;
typedef struct hdfda_estimates hdfda_estimates;

HDFDA_API const char* hdfda_version(void);
HDFDA_API const char* hdfda_last_error(void);
HDFDA_API void hdfda_string_free(char* s);

/* Caps worker threads; 0 restores the default (HDFDA_THREADS, then hardware). */
HDFDA_API hdfda_status hdfda_set_threads(int threads);
HDFDA_API int hdfda_get_threads(void);

/* ---- observations ------------------------------------------------------ */

/* design: "fr" or "sr". domain: "lo:hi" shared by all components, a
 * comma-separated list with one interval per component, or NULL for [0,1]. */
HDFDA_API hdfda_status hdfda_observations_read_csv(const char* path, const char* design, const char* domain,
                                                   hdfda_observations** out);
HDFDA_API hdfda_status hdfda_observations_write_csv(const hdfda_observations* obs, const char* path);
HDFDA_API hdfda_status hdfda_observations_shape(const hdfda_observations* obs, size_t* subjects, size_t* components,
                                                size_t* total);
/* i, j are 0-based. */
HDFDA_API hdfda_status hdfda_observations_count(const hdfda_observations* obs, size_t i, size_t j, size_t* count);
HDFDA_API void hdfda_observations_free(hdfda_observations* obs);

/* ---- simulation and truth ---------------------------------------------- */

/* config_json: simulation config object. Either output pointer may be NULL. */
HDFDA_API hdfda_status hdfda_simulate(const char* config_json, hdfda_observations** obs, hdfda_truth** truth);
/* Echo of the config with every default filled in. */
HDFDA_API hdfda_status hdfda_simulation_resolve(const char* config_json, char** out_json);

HDFDA_API hdfda_status hdfda_truth_read(const char* path, hdfda_truth** out);
HDFDA_API hdfda_status hdfda_truth_write(const hdfda_truth* truth, const char* path);
HDFDA_API hdfda_status hdfda_truth_mean(const hdfda_truth* truth, size_t j, double t, double* out);
HDFDA_API hdfda_status hdfda_truth_cov(const hdfda_truth* truth, size_t j, size_t k, double s, double t, double* out);
HDFDA_API void hdfda_truth_free(hdfda_truth* truth);

/* ---- estimation -------------------------------------------------------- */

typedef struct hdfda_estimate_options {
    const char* scheme;            /* "obs" (default) or "subj" */
    const char* kernel;            /* "epanechnikov" (default), "biweight", "gaussian" */
    int estimate_mean;             /* nonzero: fit mean curves (default 1) */
    const char* pairs;             /* NULL: no covariance; else "all", "diag" or "j:k,..." (1-based) */
    double bw_mean;                /* > 0: fixed mean bandwidth; otherwise prescribed */
    double bw_cov;                 /* > 0: fixed covariance bandwidth; otherwise prescribed */
    double bw_const;               /* constant c of the prescribed bandwidths (default 1) */
    double regime_const;           /* constant of the regime classification (default 1) */
    size_t grid_mean;              /* points per mean grid (default 101) */
    size_t grid_cov;               /* points per surface axis (default 51) */
    const hdfda_truth* mean_truth; /* covariance centering: NULL plugs in the fitted mean */
} hdfda_estimate_options;

HDFDA_API void hdfda_estimate_options_default(hdfda_estimate_options* opts);
HDFDA_API hdfda_status hdfda_estimate(const hdfda_observations* obs, const hdfda_estimate_options* opts,
                                      hdfda_estimates** out);
/* Writes mean.csv, cov.csv (when fitted) and estimate.json into dir. */
HDFDA_API hdfda_status hdfda_estimates_write(const hdfda_estimates* est, const char* dir);
/* Bandwidths, regimes and Missing counts as JSON. */
HDFDA_API hdfda_status hdfda_estimates_info(const hdfda_estimates* est, char** out_json);
/* status: 0 exact, 1 fallback, 2 missing. Indices 0-based. */
HDFDA_API hdfda_status hdfda_estimates_mean(const hdfda_estimates* est, size_t j, size_t g, double* t, double* value,
                                            int* status);
HDFDA_API hdfda_status hdfda_estimates_cov(const hdfda_estimates* est, size_t j, size_t k, size_t a, size_t b,
                                           double* value, int* status);
HDFDA_API void hdfda_estimates_free(hdfda_estimates* est);

/* ---- diagnostics and experiments ---------------------------------------- */

/* Count summaries and homogeneity ratios; pairs as in the estimate options
 * (NULL means "all"). */
HDFDA_API hdfda_status hdfda_diagnose(const hdfda_observations* obs, const char* pairs, double threshold,
                                      char** out_json);

/* Sweep from a JSON config; writes the output tables into out_dir (NULL to
 * skip writing). summary_json may be NULL. */
HDFDA_API hdfda_status hdfda_run_sweep(const char* config_json, const char* out_dir, char** summary_json);
/* OBS vs SUBJ on identical data; summary_json receives compare.json. */
HDFDA_API hdfda_status hdfda_run_compare(const char* config_json, const char* out_dir, char** summary_json);

#ifdef __cplusplus
}
#endif

#endif /* HDFDA_H */
