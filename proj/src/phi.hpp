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
#include <memory>

namespace steincv {

/// A twice-differentiable scalar field phi used as the potential of a Stein
/// control variate. Evaluation is pure; implementations are immutable while
/// being evaluated.
class PhiFunction {
public:
    virtual ~PhiFunction() = default;
    virtual int dim() const = 0;
    virtual double value(const Eigen::Ref<const Eigen::VectorXd>& x) const = 0;
    virtual void gradient(const Eigen::Ref<const Eigen::VectorXd>& x,
                          Eigen::Ref<Eigen::VectorXd> out) const = 0;
    virtual double laplacian(const Eigen::Ref<const Eigen::VectorXd>& x) const = 0;

    Eigen::VectorXd gradient(const Eigen::Ref<const Eigen::VectorXd>& x) const {
        Eigen::VectorXd g(dim());
        gradient(x, g);
        return g;
    }

    /// Gradient and Laplacian for every row of points (n x dim); gradients is
    /// resized to n x dim and laplacians to n. The default loops over rows;
    /// implementations may share buffers across rows.
    virtual void derivative_rows(const Eigen::Ref<const Eigen::MatrixXd>& points,
                                 Eigen::MatrixXd& gradients, Eigen::VectorXd& laplacians) const {
        gradients.resize(points.rows(), points.cols());
        laplacians.resize(points.rows());
        Eigen::VectorXd x(points.cols());
        Eigen::VectorXd g(points.cols());
        for (Eigen::Index i = 0; i < points.rows(); ++i) {
            x = points.row(i).transpose();
            gradient(x, g);
            gradients.row(i) = g.transpose();
            laplacians[i] = laplacian(x);
        }
    }
};

/// Opaque per-thread scratch for gradient accumulation; concrete models
/// allocate whatever reusable buffers they need.
struct GradientScratch {
    virtual ~GradientScratch() = default;
};

/// A phi family with a flat parameter vector, supporting exact reverse-mode
/// derivatives of any linear functional of (value, input gradient, input
/// Laplacian) at a point. The training loop drives models exclusively through
/// this interface.
class TrainablePhi : public PhiFunction {
public:
    virtual Eigen::Index parameter_count() const = 0;
    virtual Eigen::VectorXd parameters() const = 0;
    virtual void set_parameters(const Eigen::Ref<const Eigen::VectorXd>& theta) = 0;

    virtual std::unique_ptr<GradientScratch> make_gradient_scratch() const = 0;

    /// Accumulates into grad the derivative with respect to the parameters of
    ///   w_value * value(x) + w_gradient . gradient(x) + w_laplacian * laplacian(x).
    /// grad must have parameter_count() entries; scratch must come from
    /// make_gradient_scratch() on a model of identical shape.
    virtual void accumulate_parameter_gradient(const Eigen::Ref<const Eigen::VectorXd>& x,
                                               double w_value,
                                               const Eigen::Ref<const Eigen::VectorXd>& w_gradient,
                                               double w_laplacian, GradientScratch& scratch,
                                               Eigen::Ref<Eigen::VectorXd> grad) const = 0;

    virtual std::unique_ptr<TrainablePhi> clone() const = 0;
};

}  // namespace steincv
