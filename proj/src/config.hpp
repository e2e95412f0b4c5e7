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

#include <cstdint>
#include <json.hpp>
#include <string>
#include <vector>

#include "adam.hpp"
#include "sampler.hpp"

namespace steincv {

/// Experiment description as read from a JSON config file. See
/// configs/*.json for the bundled references.
struct ExperimentConfig {
    // target
    std::string target_name = "gaussian";  // gaussian | funnel | banana | logreg
    int dim = 2;
    double funnel_a = 1.0;
    double funnel_b = 0.5;
    double banana_p = 20.0;
    double banana_b = 0.05;
    double logreg_g = 100.0;
    std::string dataset_file = "pima-indians-diabetes.csv";  // resolved against the data dir

    // sampler
    SamplerConfig sampler;
    std::string pregenerated_chain_path;  // optional training chain file

    // estimator
    std::string window = "triangular";
    std::size_t b_n = 30;

    // model
    std::string model_family = "mlp";  // mlp | polynomial
    std::vector<int> widths = {32};
    std::string activation = "recu";
    bool bias = true;
    int degree = 4;
    std::string poly_fit = "exact";  // exact | gd

    // optimizer
    AdamConfig adam;
    int epochs = 500;
    std::int64_t minibatch_window = 0;
    bool parallel_gradients = false;

    // functional
    std::string functional_kind = "coordinate_square";
    int coordinate = 2;

    // output
    std::string output_dir = "out";
    nlohmann::json metadata;  // echoed verbatim into report.json

    void validate() const;
};

/// Parses and validates a config; throws ConfigError naming the offending
/// field (or the parse position for malformed JSON).
ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::string& path);

/// Serialization is the exact inverse of parsing for canonical configs.
nlohmann::json config_to_json(const ExperimentConfig& cfg);
std::string serialize_config(const ExperimentConfig& cfg);

}  // namespace steincv
