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
#pragma once

#include <memory>
#include <string>

#include "config.hpp"
#include "esvm.hpp"

namespace steincv {

/// Builds the target named by the config; the data directory is consulted for
/// dataset-backed targets (empty string means current directory / env).
std::unique_ptr<Target> make_target(const ExperimentConfig& cfg, const std::string& data_dir);

/// Same from a bare target spec {"name":..., "dim":..., "params": {...},
/// "seed": ...}; the seed drives the dataset train/test split.
std::unique_ptr<Target> make_target_from_json(const nlohmann::json& spec,
                                              const std::string& data_dir);

/// Resolves the dataset path against data_dir (or the STEINCV_DATA_DIR
/// environment variable when data_dir is empty).
std::string resolve_dataset_path(const ExperimentConfig& cfg, const std::string& data_dir);

struct ExperimentResult {
    EsvmReport report;
    std::string report_json;  // exact contents of report.json
};

/// End-to-end run: build target, obtain the training chain (generated or
/// pregenerated), fit the model, generate test chains, evaluate, and emit
/// report.json, boxplot.csv, loss.csv and boxplot.gp into cfg.output_dir
/// (all writes are atomic).
ExperimentResult run_experiment(const ExperimentConfig& cfg, const std::string& data_dir);

/// Generates the training chain for a config and writes it to out_path in the
/// binary chain format.
void sample_to_file(const ExperimentConfig& cfg, const std::string& data_dir,
                    const std::string& out_path);

struct GradCheckResult {
    double max_gradient_rel_err = 0.0;
    double max_laplacian_rel_err = 0.0;
    double max_parameter_rel_err = 0.0;
    bool laplacian_checked = false;
    bool passed = false;
};

/// Finite-difference consistency suites for the analytic derivatives:
/// input gradient (tol 1e-5), input Laplacian (tol 1e-4) and the parameter
/// gradient of the ESVM loss on a short Gaussian chain (tol 1e-4).
GradCheckResult gradient_check(const std::string& activation, int dim,
                               const std::vector<int>& widths, std::uint64_t seed,
                               bool check_laplacian);

}  // namespace steincv
