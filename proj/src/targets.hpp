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
#include <memory>
#include <string>

namespace steincv {

/// An unnormalized target density pi(x) proportional to exp(-U(x)), given by
/// its potential U and gradient. Immutable after construction; all member
/// functions are pure and safe to call concurrently.
class Target {
public:
    Target(std::string name, int dim) : name_(std::move(name)), dim_(dim) {}
    virtual ~Target() = default;

    const std::string& name() const { return name_; }
    int dim() const { return dim_; }

    virtual double potential(const Eigen::Ref<const Eigen::VectorXd>& x) const = 0;
    virtual void grad_potential(const Eigen::Ref<const Eigen::VectorXd>& x,
                                Eigen::Ref<Eigen::VectorXd> out) const = 0;

    Eigen::VectorXd grad_potential(const Eigen::Ref<const Eigen::VectorXd>& x) const {
        Eigen::VectorXd g(dim_);
        grad_potential(x, g);
        return g;
    }

protected:
    void check_dim(const Eigen::Ref<const Eigen::VectorXd>& x) const;

private:
    std::string name_;
    int dim_;
};

/// Standard Gaussian reference target: U(x) = |x|^2 / 2, grad U = x.
class GaussianTarget final : public Target {
public:
    using Target::grad_potential;
    explicit GaussianTarget(int dim);
    double potential(const Eigen::Ref<const Eigen::VectorXd>& x) const override;
    void grad_potential(const Eigen::Ref<const Eigen::VectorXd>& x,
                        Eigen::Ref<Eigen::VectorXd> out) const override;
};

/// Funnel target, d >= 2:
///   U(x) = x1^2/(2a) + (d-1) b x1 + exp(-2 b x1) * sum_{i>=2} x_i^2 / 2.
class FunnelTarget final : public Target {
public:
    using Target::grad_potential;
    FunnelTarget(int dim, double a, double b);
    double potential(const Eigen::Ref<const Eigen::VectorXd>& x) const override;
    void grad_potential(const Eigen::Ref<const Eigen::VectorXd>& x,
                        Eigen::Ref<Eigen::VectorXd> out) const override;
    double a() const { return a_; }
    double b() const { return b_; }

private:
    double a_;
    double b_;
};

/// Banana-shaped target, d >= 2:
///   U(x) = x1^2/(2p) + (x2 + b x1^2 - p b)^2 / 2 + sum_{k>=3} x_k^2 / 2.
class BananaTarget final : public Target {
public:
    using Target::grad_potential;
    BananaTarget(int dim, double p, double b);
    double potential(const Eigen::Ref<const Eigen::VectorXd>& x) const override;
    void grad_potential(const Eigen::Ref<const Eigen::VectorXd>& x,
                        Eigen::Ref<Eigen::VectorXd> out) const override;
    double p() const { return p_; }
    double b() const { return b_; }

private:
    double p_;
    double b_;
};

/// Binary-response regression data in the whitened parameter space of the
/// Zellner g-prior. The whitened design satisfies Zt' Zt = I (over the full
/// data, provided it has full column rank), so the prior on the whitened
/// coefficients is N(0, g I).
struct LogRegData {
    Eigen::MatrixXd whitened;      // N x d, intercept column appended before whitening
    Eigen::VectorXd labels;        // N entries in {0,1}
    Eigen::MatrixXd train_design;  // floor(0.8 N) rows of `whitened`
    Eigen::VectorXd train_labels;
    Eigen::MatrixXd test_design;   // remaining rows
    Eigen::VectorXd test_labels;
    double prior_scale = 100.0;  // g

    int dim() const { return static_cast<int>(whitened.cols()); }
};

/// Symmetric inverse square root whitening: rows of Z are mapped through
/// (Z^T Z)^{-1/2} computed by eigendecomposition with eigenvalues floored at
/// 1e-12.
Eigen::MatrixXd whiten_design(const Eigen::MatrixXd& design);

/// Loads a logistic-regression CSV (feature columns followed by one binary
/// outcome column; optional header auto-detected by a non-numeric first row),
/// appends a constant-1 intercept column, whitens, and splits into
/// floor(0.8 N) train / remaining test rows by a seeded shuffle.
/// Throws IngestionError naming the offending row on malformed input.
LogRegData load_logreg_csv(const std::string& path, double prior_scale, std::uint64_t seed);

/// The Pima dataset is a load_logreg_csv file with 768 rows and 8 feature
/// columns; with the intercept the whitened design has d = 9 and the split is
/// 614 train / 154 test.
LogRegData load_pima(const std::string& path, double prior_scale, std::uint64_t seed);

/// Bayesian logistic regression posterior in the whitened space:
///   U(x) = -sum_i [ Y_i z_i.x - ln(1 + exp(z_i.x)) ] + |x|^2 / (2g),
/// summed over the training rows.
class LogRegTarget final : public Target {
public:
    using Target::grad_potential;
    explicit LogRegTarget(LogRegData data);
    double potential(const Eigen::Ref<const Eigen::VectorXd>& x) const override;
    void grad_potential(const Eigen::Ref<const Eigen::VectorXd>& x,
                        Eigen::Ref<Eigen::VectorXd> out) const override;
    const LogRegData& data() const { return data_; }

private:
    LogRegData data_;
};

/// Numerically stable ln(1 + exp(t)).
double log1p_exp(double t);

}  // namespace steincv
