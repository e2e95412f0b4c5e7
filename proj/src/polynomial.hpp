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
#include <vector>

#include "phi.hpp"
#include "specvar.hpp"
#include "targets.hpp"

namespace steincv {

/// Multivariate polynomial potential over the monomial basis of total degree
/// <= degree (degree <= 4), ordered graded-lexicographically; coefficient
/// count is C(d + degree, degree). Derivatives are analytic.
class PolynomialPhi final : public TrainablePhi {
public:
    using PhiFunction::gradient;
    PolynomialPhi(int dim, int degree);

    int degree() const { return degree_; }
    Eigen::Index basis_size() const { return static_cast<Eigen::Index>(exponents_.size()); }
    const std::vector<std::vector<int>>& exponents() const { return exponents_; }

    int dim() const override { return dim_; }
    double value(const Eigen::Ref<const Eigen::VectorXd>& x) const override;
    void gradient(const Eigen::Ref<const Eigen::VectorXd>& x,
                  Eigen::Ref<Eigen::VectorXd> out) const override;
    double laplacian(const Eigen::Ref<const Eigen::VectorXd>& x) const override;

    Eigen::Index parameter_count() const override { return basis_size(); }
    Eigen::VectorXd parameters() const override { return coefficients_; }
    void set_parameters(const Eigen::Ref<const Eigen::VectorXd>& theta) override;
    std::unique_ptr<GradientScratch> make_gradient_scratch() const override;
    void accumulate_parameter_gradient(const Eigen::Ref<const Eigen::VectorXd>& x, double w_value,
                                       const Eigen::Ref<const Eigen::VectorXd>& w_gradient,
                                       double w_laplacian, GradientScratch& scratch,
                                       Eigen::Ref<Eigen::VectorXd> grad) const override;
    std::unique_ptr<TrainablePhi> clone() const override;

    /// Per-monomial (value, gradient, laplacian) at x; values has basis_size()
    /// entries, grads is basis_size() x dim.
    void monomial_derivatives(const Eigen::Ref<const Eigen::VectorXd>& x,
                              Eigen::Ref<Eigen::VectorXd> values, Eigen::Ref<Eigen::MatrixXd> grads,
                              Eigen::Ref<Eigen::VectorXd> laps) const;

private:
    int dim_;
    int degree_;
    std::vector<std::vector<int>> exponents_;  // graded-lex order
    Eigen::VectorXd coefficients_;
};

/// The spectral variance of f - g_phi is a quadratic form in the polynomial
/// coefficients; this solves the normal equations exactly (the constant
/// monomial is excluded — its control variate vanishes identically).
/// Serves both as a fitting route and as an oracle for gradient training.
PolynomialPhi fit_polynomial_exact(const Eigen::Ref<const Eigen::MatrixXd>& states,
                                   const Eigen::Ref<const Eigen::VectorXd>& f_values,
                                   const Target& target, const SpectralVarianceEstimator& est,
                                   int degree);

}  // namespace steincv
