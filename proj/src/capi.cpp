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
#include "steincv/steincv.h"

#include <cstdlib>
#include <cstring>
#include <json.hpp>
#include <string>

#include "config.hpp"
#include "errors.hpp"
#include "esvm.hpp"
#include "experiment.hpp"
#include "fsutil.hpp"
#include "mlp.hpp"
#include "sampler.hpp"
#include "specvar.hpp"
#include "stein.hpp"
#include "targets.hpp"

struct steincv_target {
    std::unique_ptr<steincv::Target> impl;
};

struct steincv_chain {
    steincv::Chain impl;
};

struct steincv_mlp {
    steincv::MultilayerPerceptron impl;
};

namespace {

thread_local std::string g_last_error;

void set_error(const std::string& message) { g_last_error = message; }

/// Runs the body, translating C++ exceptions into status codes.
template <typename Fn>
steincv_status guarded(Fn&& body) {
    try {
        body();
        return STEINCV_OK;
    } catch (const steincv::UnsupportedError& e) {
        set_error(e.what());
        return STEINCV_ERR_UNSUPPORTED;
    } catch (const steincv::ConfigError& e) {
        set_error(e.what());
        return STEINCV_ERR_CONFIG;
    } catch (const std::domain_error& e) {
        set_error(e.what());
        return STEINCV_ERR_CONFIG;
    } catch (const std::out_of_range& e) {
        set_error(e.what());
        return STEINCV_ERR_CONFIG;
    } catch (const std::exception& e) {
        set_error(e.what());
        return STEINCV_ERR_RUNTIME;
    } catch (...) {
        set_error("unknown error");
        return STEINCV_ERR_RUNTIME;
    }
}

steincv_status require(bool condition, const char* message) {
    if (condition) return STEINCV_OK;
    set_error(message);
    return STEINCV_ERR_CONFIG;
}

Eigen::Map<const Eigen::VectorXd> map_vector(const double* x, int32_t dim) {
    return Eigen::Map<const Eigen::VectorXd>(x, dim);
}

steincv::ExperimentConfig load_config_with_overrides(const char* config_path, const char* out_dir,
                                                     uint64_t seed_override,
                                                     int32_t has_seed_override) {
    steincv::ExperimentConfig cfg = steincv::load_config(config_path);
    if (has_seed_override != 0) cfg.sampler.seed = seed_override;
    if (out_dir != nullptr && out_dir[0] != '\0') cfg.output_dir = out_dir;
    return cfg;
}

}  // namespace

extern "C" {

const char* steincv_version(void) { return "0.1.0"; }

const char* steincv_last_error(void) { return g_last_error.c_str(); }

steincv_status steincv_target_create(const char* spec_json, const char* data_dir,
                                     steincv_target** out) {
    if (auto st = require(spec_json != nullptr && out != nullptr, "null argument")) return st;
    return guarded([&]() {
        nlohmann::json spec;
        try {
            spec = nlohmann::json::parse(spec_json);
        } catch (const nlohmann::json::parse_error& e) {
            throw steincv::ConfigError(std::string("target spec parse error: ") + e.what());
        }
        auto target = steincv::make_target_from_json(spec, data_dir == nullptr ? "" : data_dir);
        *out = new steincv_target{std::move(target)};
    });
}

void steincv_target_free(steincv_target* target) { delete target; }

steincv_status steincv_target_dim(const steincv_target* target, int32_t* out) {
    if (auto st = require(target != nullptr && out != nullptr, "null argument")) return st;
    *out = target->impl->dim();
    return STEINCV_OK;
}

steincv_status steincv_target_potential(const steincv_target* target, const double* x, int32_t dim,
                                        double* out) {
    if (auto st = require(target != nullptr && x != nullptr && out != nullptr, "null argument")) {
        return st;
    }
    return guarded([&]() { *out = target->impl->potential(map_vector(x, dim)); });
}

steincv_status steincv_target_grad_potential(const steincv_target* target, const double* x,
                                             int32_t dim, double* out) {
    if (auto st = require(target != nullptr && x != nullptr && out != nullptr, "null argument")) {
        return st;
    }
    return guarded([&]() {
        Eigen::Map<Eigen::VectorXd> result(out, dim);
        Eigen::VectorXd g = target->impl->grad_potential(map_vector(x, dim));
        result = g;
    });
}

steincv_status steincv_chain_generate(const steincv_target* target,
                                      const steincv_sampler_options* options,
                                      steincv_chain** out) {
    if (auto st = require(target != nullptr && options != nullptr && out != nullptr,
                          "null argument")) {
        return st;
    }
    return guarded([&]() {
        steincv::SamplerConfig cfg;
        cfg.step_size = options->gamma;
        cfg.n_burn = options->n_burn;
        cfg.n_train = options->n_states;
        cfg.n_test = options->n_states;
        cfg.seed = options->seed;
        const auto role =
            options->role == 0 ? steincv::ChainRole::Train : steincv::ChainRole::Test;
        auto chain = steincv::generate_chain(*target->impl, cfg, role, options->chain_index);
        *out = new steincv_chain{std::move(chain)};
    });
}

void steincv_chain_free(steincv_chain* chain) { delete chain; }

steincv_status steincv_chain_shape(const steincv_chain* chain, int64_t* n, int64_t* d) {
    if (auto st = require(chain != nullptr && n != nullptr && d != nullptr, "null argument")) {
        return st;
    }
    *n = chain->impl.length();
    *d = chain->impl.dim();
    return STEINCV_OK;
}

steincv_status steincv_chain_states(const steincv_chain* chain, double* out, int64_t capacity) {
    if (auto st = require(chain != nullptr && out != nullptr, "null argument")) return st;
    const int64_t needed = chain->impl.length() * chain->impl.dim();
    if (auto st = require(capacity >= needed, "output buffer too small")) return st;
    int64_t pos = 0;
    for (Eigen::Index i = 0; i < chain->impl.length(); ++i) {
        for (Eigen::Index j = 0; j < chain->impl.dim(); ++j) out[pos++] = chain->impl.states(i, j);
    }
    return STEINCV_OK;
}

steincv_status steincv_chain_save(const steincv_chain* chain, const char* path) {
    if (auto st = require(chain != nullptr && path != nullptr, "null argument")) return st;
    return guarded([&]() { steincv::save_chain(chain->impl, path); });
}

steincv_status steincv_chain_load(const char* path, steincv_chain** out) {
    if (auto st = require(path != nullptr && out != nullptr, "null argument")) return st;
    return guarded([&]() { *out = new steincv_chain{steincv::load_chain(path)}; });
}

steincv_status steincv_spectral_variance(const double* series, int64_t n, int32_t window,
                                         int64_t truncation_point, double* out) {
    if (auto st = require(series != nullptr && out != nullptr && n > 0, "bad series")) return st;
    return guarded([&]() {
        steincv::SpectralVarianceEstimator est;
        est.window = window == 1 ? steincv::LagWindow::trapezoidal()
                                 : steincv::LagWindow::triangular();
        est.truncation_point = static_cast<std::size_t>(truncation_point);
        *out = steincv::spectral_variance(
            std::span<const double>(series, static_cast<std::size_t>(n)), est);
    });
}

steincv_status steincv_autocovariance(const double* series, int64_t n, int64_t lag, double* out) {
    if (auto st = require(series != nullptr && out != nullptr && n > 0 && lag >= 0, "bad series")) {
        return st;
    }
    return guarded([&]() {
        *out = steincv::sample_autocovariance(
            std::span<const double>(series, static_cast<std::size_t>(n)),
            static_cast<std::size_t>(lag));
    });
}

steincv_status steincv_confidence_interval(double estimate, double variance, int64_t n_samples,
                                           double delta, double* lower, double* upper) {
    if (auto st = require(lower != nullptr && upper != nullptr && n_samples > 0,
                          "null argument")) {
        return st;
    }
    return guarded([&]() {
        const auto [lo, hi] = steincv::confidence_interval(
            estimate, variance, static_cast<std::size_t>(n_samples), delta);
        *lower = lo;
        *upper = hi;
    });
}

steincv_status steincv_mlp_create(const int32_t* architecture, int32_t arch_len,
                                  const char* activation, int32_t with_bias, uint64_t seed,
                                  steincv_mlp** out) {
    if (auto st = require(architecture != nullptr && activation != nullptr && out != nullptr &&
                              arch_len >= 3,
                          "bad architecture")) {
        return st;
    }
    return guarded([&]() {
        std::vector<int> arch(architecture, architecture + arch_len);
        auto net = steincv::MultilayerPerceptron::random(
            arch, steincv::activation_from_name(activation), with_bias != 0, seed);
        *out = new steincv_mlp{std::move(net)};
    });
}

void steincv_mlp_free(steincv_mlp* mlp) { delete mlp; }

steincv_status steincv_mlp_save_json(const steincv_mlp* mlp, const char* path) {
    if (auto st = require(mlp != nullptr && path != nullptr, "null argument")) return st;
    return guarded([&]() { mlp->impl.save_json(path); });
}

steincv_status steincv_mlp_load_json(const char* path, steincv_mlp** out) {
    if (auto st = require(path != nullptr && out != nullptr, "null argument")) return st;
    return guarded(
        [&]() { *out = new steincv_mlp{steincv::MultilayerPerceptron::load_json(path)}; });
}

steincv_status steincv_mlp_forward(const steincv_mlp* mlp, const double* x, int32_t dim,
                                   double* out) {
    if (auto st = require(mlp != nullptr && x != nullptr && out != nullptr, "null argument")) {
        return st;
    }
    return guarded([&]() { *out = mlp->impl.forward(map_vector(x, dim)); });
}

steincv_status steincv_mlp_input_gradient(const steincv_mlp* mlp, const double* x, int32_t dim,
                                          double* out) {
    if (auto st = require(mlp != nullptr && x != nullptr && out != nullptr, "null argument")) {
        return st;
    }
    return guarded([&]() {
        Eigen::Map<Eigen::VectorXd> result(out, dim);
        result = mlp->impl.input_gradient(map_vector(x, dim));
    });
}

steincv_status steincv_mlp_input_laplacian(const steincv_mlp* mlp, const double* x, int32_t dim,
                                           double* out) {
    if (auto st = require(mlp != nullptr && x != nullptr && out != nullptr, "null argument")) {
        return st;
    }
    return guarded([&]() { *out = mlp->impl.input_laplacian(map_vector(x, dim)); });
}

steincv_status steincv_stein_apply(const steincv_mlp* mlp, const steincv_target* target,
                                   const double* x, int32_t dim, double radius, double* out) {
    if (auto st = require(mlp != nullptr && target != nullptr && x != nullptr && out != nullptr,
                          "null argument")) {
        return st;
    }
    return guarded([&]() {
        if (radius > 0.0) {
            *out = steincv::stein_apply_truncated(mlp->impl, map_vector(x, dim), *target->impl,
                                                  radius);
        } else {
            *out = steincv::stein_apply(mlp->impl, map_vector(x, dim), *target->impl);
        }
    });
}

steincv_status steincv_run_experiment(const char* config_path, const char* data_dir,
                                      const char* out_dir, uint64_t seed_override,
                                      int32_t has_seed_override, char** report_json) {
    if (auto st = require(config_path != nullptr, "null config path")) return st;
    return guarded([&]() {
        const steincv::ExperimentConfig cfg =
            load_config_with_overrides(config_path, out_dir, seed_override, has_seed_override);
        const steincv::ExperimentResult result =
            steincv::run_experiment(cfg, data_dir == nullptr ? "" : data_dir);
        if (report_json != nullptr) {
            char* copy = static_cast<char*>(std::malloc(result.report_json.size() + 1));
            if (copy == nullptr) throw std::bad_alloc();
            std::memcpy(copy, result.report_json.c_str(), result.report_json.size() + 1);
            *report_json = copy;
        }
    });
}

steincv_status steincv_sample_chain(const char* config_path, const char* data_dir,
                                    uint64_t seed_override, int32_t has_seed_override,
                                    const char* out_path) {
    if (auto st = require(config_path != nullptr && out_path != nullptr, "null argument")) {
        return st;
    }
    return guarded([&]() {
        const steincv::ExperimentConfig cfg =
            load_config_with_overrides(config_path, nullptr, seed_override, has_seed_override);
        steincv::sample_to_file(cfg, data_dir == nullptr ? "" : data_dir, out_path);
    });
}

steincv_status steincv_gradcheck(const char* activation, int32_t dim, const int32_t* widths,
                                 int32_t n_widths, uint64_t seed, int32_t check_laplacian,
                                 steincv_gradcheck_result* out) {
    if (auto st = require(activation != nullptr && widths != nullptr && out != nullptr &&
                              n_widths > 0,
                          "bad arguments")) {
        return st;
    }
    return guarded([&]() {
        const std::vector<int> w(widths, widths + n_widths);
        const steincv::GradCheckResult res =
            steincv::gradient_check(activation, dim, w, seed, check_laplacian != 0);
        out->max_gradient_rel_err = res.max_gradient_rel_err;
        out->max_laplacian_rel_err = res.max_laplacian_rel_err;
        out->max_parameter_rel_err = res.max_parameter_rel_err;
        out->laplacian_checked = res.laplacian_checked ? 1 : 0;
        out->passed = res.passed ? 1 : 0;
    });
}

void steincv_string_free(char* text) { std::free(text); }

}  // extern "C"
