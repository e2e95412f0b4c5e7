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

#include <Eigen/Dense>
#include <cstdint>

namespace steincv {

struct AdamConfig {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    double weight_decay = 1e-5;

    void validate() const;
};

/// Bias-corrected Adam with decoupled weight decay: parameters are scaled by
/// (1 - lr * weight_decay) before each moment update.
class AdamState {
public:
    AdamState(Eigen::Index n_params, AdamConfig cfg);

    void step(Eigen::Ref<Eigen::VectorXd> params, const Eigen::Ref<const Eigen::VectorXd>& grads);

    std::int64_t step_count() const { return step_; }
    const AdamConfig& config() const { return cfg_; }

private:
    AdamConfig cfg_;
    Eigen::VectorXd m_;
    Eigen::VectorXd v_;
    std::int64_t step_ = 0;
};

}  // namespace steincv
