/*
 * Copyright (c) 2026 The steincv Authors
 *
 * Licensed under the Apache License, Version 2.0;
 * You may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an 'AS IS' BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

/* C interface of the steincv shared library.
 *
 * All functions return a steincv_status; outputs go through pointers. On
 * failure, steincv_last_error() describes the problem (the message is
 * thread-local). Objects are opaque handles released with the matching
 * *_free function. Handles are immutable after creation and may be shared
 * across threads.
 */
#ifndef STEINCV_H
#define STEINCV_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define STEINCV_API __declspec(dllexport)
#else
#define STEINCV_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum steincv_status {
    STEINCV_OK = 0,
    STEINCV_ERR_RUNTIME = 1,     /* numeric failures, divergence, I/O */
    STEINCV_ERR_CONFIG = 2,      /* invalid arguments or configuration */
    STEINCV_ERR_UNSUPPORTED = 3, /* e.g. Laplacian of a ReLU network */
} steincv_status;

typedef struct steincv_target steincv_target;
typedef struct steincv_chain steincv_chain;
typedef struct steincv_mlp steincv_mlp;

STEINCV_API const char* steincv_version(void);

/* Message for the most recent failure on the calling thread. */
STEINCV_API const char* steincv_last_error(void);

/* ---- targets ------------------------------------------------------- */

/* spec_json: {"name": "gaussian"|"funnel"|"banana"|"logreg",
 *             "dim": d, "params": {...}} — same shape as the config file's
 * target section. data_dir may be NULL (falls back to STEINCV_DATA_DIR). */
STEINCV_API steincv_status steincv_target_create(const char* spec_json, const char* data_dir,
                                                 steincv_target** out);
STEINCV_API void steincv_target_free(steincv_target* target);
STEINCV_API steincv_status steincv_target_dim(const steincv_target* target, int32_t* out);
STEINCV_API steincv_status steincv_target_potential(const steincv_target* target, const double* x,
                                                    int32_t dim, double* out);
STEINCV_API steincv_status steincv_target_grad_potential(const steincv_target* target,
                                                         const double* x, int32_t dim,
                                                         double* out);

/* ---- chains -------------------------------------------------------- */

typedef struct steincv_sampler_options {
    double gamma;
    int64_t n_burn;
    int64_t n_states;
    uint64_t seed;
    int32_t role; /* 0 = train, 1 = test */
    uint64_t chain_index;
} steincv_sampler_options;

STEINCV_API steincv_status steincv_chain_generate(const steincv_target* target,
                                                  const steincv_sampler_options* options,
                                                  steincv_chain** out);
STEINCV_API void steincv_chain_free(steincv_chain* chain);
STEINCV_API steincv_status steincv_chain_shape(const steincv_chain* chain, int64_t* n, int64_t* d);
/* Copies the states row-major into out (n*d doubles). */
STEINCV_API steincv_status steincv_chain_states(const steincv_chain* chain, double* out,
                                                int64_t capacity);
STEINCV_API steincv_status steincv_chain_save(const steincv_chain* chain, const char* path);
STEINCV_API steincv_status steincv_chain_load(const char* path, steincv_chain** out);

/* ---- spectral variance --------------------------------------------- */

/* window: 0 = triangular, 1 = trapezoidal. */
STEINCV_API steincv_status steincv_spectral_variance(const double* series, int64_t n,
                                                     int32_t window, int64_t truncation_point,
                                                     double* out);
STEINCV_API steincv_status steincv_autocovariance(const double* series, int64_t n, int64_t lag,
                                                  double* out);
STEINCV_API steincv_status steincv_confidence_interval(double estimate, double variance,
                                                       int64_t n_samples, double delta,
                                                       double* lower, double* upper);

/* ---- networks ------------------------------------------------------ */

/* architecture: p_0..p_{L+1} (arch_len >= 3, last entry 1);
 * activation: "recu", "requ", "relu" or "tanh". */
STEINCV_API steincv_status steincv_mlp_create(const int32_t* architecture, int32_t arch_len,
                                              const char* activation, int32_t with_bias,
                                              uint64_t seed, steincv_mlp** out);
STEINCV_API void steincv_mlp_free(steincv_mlp* mlp);
STEINCV_API steincv_status steincv_mlp_save_json(const steincv_mlp* mlp, const char* path);
STEINCV_API steincv_status steincv_mlp_load_json(const char* path, steincv_mlp** out);
STEINCV_API steincv_status steincv_mlp_forward(const steincv_mlp* mlp, const double* x,
                                               int32_t dim, double* out);
STEINCV_API steincv_status steincv_mlp_input_gradient(const steincv_mlp* mlp, const double* x,
                                                      int32_t dim, double* out);
STEINCV_API steincv_status steincv_mlp_input_laplacian(const steincv_mlp* mlp, const double* x,
                                                       int32_t dim, double* out);

/* Stein control variate of the network potential:
 * g(x) = lap phi(x) - <grad U(x), grad phi(x)>; the truncated variant is 0
 * outside the cube (-radius, radius)^d (pass radius <= 0 for no truncation). */
STEINCV_API steincv_status steincv_stein_apply(const steincv_mlp* mlp,
                                               const steincv_target* target, const double* x,
                                               int32_t dim, double radius, double* out);

/* ---- experiments ---------------------------------------------------- */

/* Runs the experiment described by the JSON config file and writes
 * report.json, boxplot.csv, loss.csv and boxplot.gp into the output
 * directory. data_dir/out_dir may be NULL (config/env defaults); pass
 * has_seed_override != 0 to replace the config seed. On success *report_json
 * receives a malloc'd copy of report.json (free with steincv_string_free). */
STEINCV_API steincv_status steincv_run_experiment(const char* config_path, const char* data_dir,
                                                  const char* out_dir, uint64_t seed_override,
                                                  int32_t has_seed_override, char** report_json);

/* Writes the config's training chain to out_path in the binary chain format
 * (header "STCV" + version + n + d, then row-major little-endian doubles). */
STEINCV_API steincv_status steincv_sample_chain(const char* config_path, const char* data_dir,
                                                uint64_t seed_override, int32_t has_seed_override,
                                                const char* out_path);

typedef struct steincv_gradcheck_result {
    double max_gradient_rel_err;
    double max_laplacian_rel_err;
    double max_parameter_rel_err;
    int32_t laplacian_checked;
    int32_t passed;
} steincv_gradcheck_result;

/* Finite-difference consistency suites for a random network of the given
 * shape. check_laplacian with "relu" fails with STEINCV_ERR_UNSUPPORTED. */
STEINCV_API steincv_status steincv_gradcheck(const char* activation, int32_t dim,
                                             const int32_t* widths, int32_t n_widths,
                                             uint64_t seed, int32_t check_laplacian,
                                             steincv_gradcheck_result* out);

STEINCV_API void steincv_string_free(char* text);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* STEINCV_H */
