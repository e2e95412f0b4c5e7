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
#include "stein.hpp"

#include <cmath>

#include "errors.hpp"
#include "rng.hpp"

namespace steincv {

double stein_apply(const PhiFunction& phi, const Eigen::Ref<const Eigen::VectorXd>& x,
                   const Target& target) {
    if (phi.dim() != target.dim()) {
        throw ConfigError("phi dimension does not match target dimension");
    }
    Eigen::VectorXd grad_phi(phi.dim());
    phi.gradient(x, grad_phi);
    const double lap = phi.laplacian(x);
    const Eigen::VectorXd grad_u = target.grad_potential(x);
    const double value = lap - grad_u.dot(grad_phi);
    if (!std::isfinite(value)) {
        throw NumericError("non-finite Stein control variate value");
    }
    return value;
}

double stein_apply_truncated(const PhiFunction& phi, const Eigen::Ref<const Eigen::VectorXd>& x,
                             const Target& target, double radius) {
    if (!(radius > 0.0)) throw ConfigError("truncation radius R must be positive");
    if (x.lpNorm<Eigen::Infinity>() >= radius) return 0.0;
    return stein_apply(phi, x, target);
}

LinearPhi optimal_phi_gaussian_linear(int dim) {
    Eigen::VectorXd c = Eigen::VectorXd::Zero(dim);
    c[0] = -1.0;
    return LinearPhi(std::move(c));
}

std::pair<double, double> monte_carlo_zero_mean_check(const PhiFunction& phi, const Target& target,
                                                      std::size_t n_samples, std::uint64_t seed) {
    if (n_samples == 0) throw std::domain_error("zero-mean check needs at least one sample");
    if (target.name() != "gaussian") {
        throw ConfigError("direct i.i.d. sampling is only available for the gaussian target");
    }
    Rng rng(seed, kStreamTest, 0x6d63);
    const int d = target.dim();
    Eigen::VectorXd x(d);
    double sum = 0.0;
    double sum_sq = 0.0;
    for (std::size_t i = 0; i < n_samples; ++i) {
        for (int j = 0; j < d; ++j) x[j] = rng.normal();
        const double g = stein_apply(phi, x, target);
        sum += g;
        sum_sq += g * g;
    }
    const double n = static_cast<double>(n_samples);
    const double mean = sum / n;
    const double var = std::max(0.0, sum_sq / n - mean * mean);
    const double stderr_mean = std::sqrt(var / n);
    return {mean, stderr_mean};
}

}  // namespace steincv
