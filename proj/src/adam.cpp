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
#include "adam.hpp"

#include <cmath>

#include "errors.hpp"

namespace steincv {

void AdamConfig::validate() const {
    if (!(learning_rate > 0.0)) throw ConfigError("Adam learning rate must be positive");
    if (!(beta1 >= 0.0 && beta1 < 1.0)) throw ConfigError("Adam beta1 must lie in [0,1)");
    if (!(beta2 >= 0.0 && beta2 < 1.0)) throw ConfigError("Adam beta2 must lie in [0,1)");
    if (!(epsilon > 0.0)) throw ConfigError("Adam epsilon must be positive");
    if (weight_decay < 0.0) throw ConfigError("Adam weight decay must be nonnegative");
}

AdamState::AdamState(Eigen::Index n_params, AdamConfig cfg) : cfg_(cfg) {
    cfg_.validate();
    m_ = Eigen::VectorXd::Zero(n_params);
    v_ = Eigen::VectorXd::Zero(n_params);
}

void AdamState::step(Eigen::Ref<Eigen::VectorXd> params,
                     const Eigen::Ref<const Eigen::VectorXd>& grads) {
    if (params.size() != m_.size() || grads.size() != m_.size()) {
        throw ConfigError("Adam step: parameter/gradient shape mismatch");
    }
    ++step_;
    if (cfg_.weight_decay != 0.0) {
        params *= 1.0 - cfg_.learning_rate * cfg_.weight_decay;
    }
    m_ = cfg_.beta1 * m_ + (1.0 - cfg_.beta1) * grads;
    v_ = cfg_.beta2 * v_ + (1.0 - cfg_.beta2) * grads.cwiseProduct(grads);
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(step_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(step_));
    for (Eigen::Index i = 0; i < params.size(); ++i) {
        const double m_hat = m_[i] / bc1;
        const double v_hat = v_[i] / bc2;
        params[i] -= cfg_.learning_rate * m_hat / (std::sqrt(v_hat) + cfg_.epsilon);
    }
}

}  // namespace steincv
