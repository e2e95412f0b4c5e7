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
#include <string>
#include <vector>

#include "phi.hpp"

namespace steincv {

enum class Activation { ReCU, ReQU, ReLU, Tanh };

Activation activation_from_name(const std::string& name);
const char* activation_name(Activation a);

/// sigma and its first three derivatives. ReCU is C^2 with piecewise-linear
/// second derivative; ReQU is C^1 (second derivative defined a.e.); ReLU has
/// no usable second derivative — Laplacian evaluation rejects it.
double activation_value(Activation a, double u);
double activation_d1(Activation a, double u);
double activation_d2(Activation a, double u);
double activation_d3(Activation a, double u);
bool activation_supports_laplacian(Activation a);

/// Fully-connected scalar-output network of depth L+1,
///   f(x) = W_L o sigma_{v_L} o W_{L-1} o ... o sigma_{v_1} o W_0 o x (+ bias),
/// with sigma_v(u) = sigma(u - v) applied componentwise. The optional output
/// bias is an extension of the strict form (bias=false removes it).
///
/// Analytic input derivatives: with u^l the pre-activations,
/// J^l = d u^l / dx, and s^l_i = tr(d^2 h^l_i / dx^2),
///   grad f = J^L^T (sigma'(u^L) .* W_L^T),
///   s^1 = sigma''(u^1) .* rowsq(J^1),
///   s^l = sigma''(u^l) .* rowsq(J^l) + sigma'(u^l) .* (W_{l-1} s^{l-1}),
///   lap f = W_L s^L.
/// The full input Hessian is assembled from the equivalent per-unit rank-one
/// expansion (see input_hessian); its trace matches the Laplacian.
class MultilayerPerceptron final : public TrainablePhi {
public:
    using PhiFunction::gradient;
    /// architecture = (p_0, ..., p_{L+1}); requires p_{L+1} = 1 and L >= 1
    /// hidden layers. Weights and shifts start at zero.
    MultilayerPerceptron(std::vector<int> architecture, Activation activation, bool with_bias);

    /// Xavier-uniform weights on +-sqrt(6/(p_in+p_out)), zero shifts and bias.
    static MultilayerPerceptron random(std::vector<int> architecture, Activation activation,
                                       bool with_bias, std::uint64_t seed);

    int dim() const override { return architecture_.front(); }
    int hidden_layers() const { return static_cast<int>(architecture_.size()) - 2; }  // L
    const std::vector<int>& architecture() const { return architecture_; }
    Activation activation() const { return activation_; }
    bool has_bias() const { return has_bias_; }
    std::uint64_t init_seed() const { return init_seed_; }

    const Eigen::MatrixXd& weight(int i) const { return weights_[static_cast<std::size_t>(i)]; }
    Eigen::MatrixXd& weight(int i) { return weights_[static_cast<std::size_t>(i)]; }
    const Eigen::VectorXd& shift(int l) const { return shifts_[static_cast<std::size_t>(l - 1)]; }
    Eigen::VectorXd& shift(int l) { return shifts_[static_cast<std::size_t>(l - 1)]; }
    double bias() const { return bias_; }
    double& bias() { return bias_; }

    double forward(const Eigen::Ref<const Eigen::VectorXd>& x) const;
    Eigen::VectorXd input_gradient(const Eigen::Ref<const Eigen::VectorXd>& x) const;
    double input_laplacian(const Eigen::Ref<const Eigen::VectorXd>& x) const;
    Eigen::MatrixXd input_hessian(const Eigen::Ref<const Eigen::VectorXd>& x) const;

    /// Smallest |pre-activation| over all units, i.e. the distance of x to
    /// the nearest activation kink (infinity for Tanh). Finite-difference
    /// checks of piecewise activations use this to stay off the seams.
    double min_kink_distance(const Eigen::Ref<const Eigen::VectorXd>& x) const;

    // PhiFunction surface.
    double value(const Eigen::Ref<const Eigen::VectorXd>& x) const override { return forward(x); }
    void gradient(const Eigen::Ref<const Eigen::VectorXd>& x,
                  Eigen::Ref<Eigen::VectorXd> out) const override;
    double laplacian(const Eigen::Ref<const Eigen::VectorXd>& x) const override {
        return input_laplacian(x);
    }

    // TrainablePhi surface. Flat layout: W_0 row-major, v_1, W_1 row-major,
    // v_2, ..., W_L row-major, then the bias when enabled.
    Eigen::Index parameter_count() const override;
    Eigen::VectorXd parameters() const override;
    void set_parameters(const Eigen::Ref<const Eigen::VectorXd>& theta) override;
    std::unique_ptr<GradientScratch> make_gradient_scratch() const override;
    void accumulate_parameter_gradient(const Eigen::Ref<const Eigen::VectorXd>& x, double w_value,
                                       const Eigen::Ref<const Eigen::VectorXd>& w_gradient,
                                       double w_laplacian, GradientScratch& scratch,
                                       Eigen::Ref<Eigen::VectorXd> grad) const override;
    std::unique_ptr<TrainablePhi> clone() const override;

    /// Checkpoint round-trip (JSON text as written by save_json).
    std::string to_json() const;
    static MultilayerPerceptron from_json(const std::string& text);
    void save_json(const std::string& path) const;
    static MultilayerPerceptron load_json(const std::string& path);

    /// Joint evaluation of the input gradient and Laplacian; the training
    /// loop and Stein operator use this to share the layer sweep.
    void gradient_and_laplacian(const Eigen::Ref<const Eigen::VectorXd>& x,
                                Eigen::Ref<Eigen::VectorXd> grad_out, double& lap_out) const;
    void gradient_and_laplacian(const Eigen::Ref<const Eigen::VectorXd>& x,
                                Eigen::Ref<Eigen::VectorXd> grad_out, double& lap_out,
                                GradientScratch& scratch) const;
    void derivative_rows(const Eigen::Ref<const Eigen::MatrixXd>& points,
                         Eigen::MatrixXd& gradients, Eigen::VectorXd& laplacians) const override;

    struct Workspace;

private:
    void run_forward(const Eigen::Ref<const Eigen::VectorXd>& x, Workspace& ws,
                     bool laplacian_chain, bool need_d2) const;
    void joint_eval(const Eigen::Ref<const Eigen::VectorXd>& x, Workspace& ws,
                    Eigen::Ref<Eigen::VectorXd> grad_out, double& lap_out) const;
    void check_input(const Eigen::Ref<const Eigen::VectorXd>& x) const;

    std::vector<int> architecture_;
    Activation activation_;
    bool has_bias_;
    std::uint64_t init_seed_ = 0;
    std::vector<Eigen::MatrixXd> weights_;  // W_0 .. W_L, W_i is p_{i+1} x p_i
    std::vector<Eigen::VectorXd> shifts_;   // v_1 .. v_L,  v_l has length p_l
    double bias_ = 0.0;
};

}  // namespace steincv
