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
#include <utility>

#include "phi.hpp"
#include "targets.hpp"

namespace steincv {

/// Stein control variate value at x:
///   g_phi(x) = lap phi(x) + <grad log pi(x), grad phi(x)>
///            = lap phi(x) - <grad U(x), grad phi(x)>.
/// Integration by parts gives pi(g_phi) = 0 for sufficiently regular phi.
double stein_apply(const PhiFunction& phi, const Eigen::Ref<const Eigen::VectorXd>& x,
                   const Target& target);

/// Truncated (biased) variant: g_phi(x) inside the open cube (-R,R)^d, 0 outside.
double stein_apply_truncated(const PhiFunction& phi, const Eigen::Ref<const Eigen::VectorXd>& x,
                             const Target& target, double radius);

/// Affine potential phi(x) = c . x + c0 (zero Laplacian).
class LinearPhi final : public PhiFunction {
public:
    using PhiFunction::gradient;
    explicit LinearPhi(Eigen::VectorXd coefficients, double constant = 0.0)
        : coefficients_(std::move(coefficients)), constant_(constant) {}

    int dim() const override { return static_cast<int>(coefficients_.size()); }
    double value(const Eigen::Ref<const Eigen::VectorXd>& x) const override {
        return coefficients_.dot(x) + constant_;
    }
    void gradient(const Eigen::Ref<const Eigen::VectorXd>&,
                  Eigen::Ref<Eigen::VectorXd> out) const override {
        out = coefficients_;
    }
    double laplacian(const Eigen::Ref<const Eigen::VectorXd>&) const override { return 0.0; }

private:
    Eigen::VectorXd coefficients_;
    double constant_;
};

/// For the standard Gaussian and f(x) = x_1 the optimal potential is
/// phi*(x) = -x_1: then g_{phi*}(x) = x_1 = f(x) - pi(f) exactly.
LinearPhi optimal_phi_gaussian_linear(int dim);

/// Monte Carlo check of pi(g_phi) = 0 on the standard Gaussian reference
/// target: returns (mean, standard error) of g_phi over n_samples i.i.d.
/// N(0, I_d) draws. Callers assert |mean| <= 4 * stderr.
std::pair<double, double> monte_carlo_zero_mean_check(const PhiFunction& phi, const Target& target,
                                                      std::size_t n_samples, std::uint64_t seed);

}  // namespace steincv
