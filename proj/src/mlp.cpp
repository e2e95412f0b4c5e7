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
#include "mlp.hpp"

#include <cmath>
#include <json.hpp>

#include "errors.hpp"
#include "fsutil.hpp"
#include "rng.hpp"

namespace steincv {

Activation activation_from_name(const std::string& name) {
    if (name == "recu") return Activation::ReCU;
    if (name == "requ") return Activation::ReQU;
    if (name == "relu") return Activation::ReLU;
    if (name == "tanh") return Activation::Tanh;
    throw ConfigError("unknown activation '" + name + "' (expected recu, requ, relu or tanh)");
}

const char* activation_name(Activation a) {
    switch (a) {
        case Activation::ReCU: return "recu";
        case Activation::ReQU: return "requ";
        case Activation::ReLU: return "relu";
        case Activation::Tanh: return "tanh";
    }
    return "?";
}

double activation_value(Activation a, double u) {
    switch (a) {
        case Activation::ReCU: {
            const double p = u > 0.0 ? u : 0.0;
            return p * p * p;
        }
        case Activation::ReQU: {
            const double p = u > 0.0 ? u : 0.0;
            return p * p;
        }
        case Activation::ReLU: return u > 0.0 ? u : 0.0;
        case Activation::Tanh: return std::tanh(u);
    }
    return 0.0;
}

double activation_d1(Activation a, double u) {
    switch (a) {
        case Activation::ReCU: {
            const double p = u > 0.0 ? u : 0.0;
            return 3.0 * p * p;
        }
        case Activation::ReQU: return u > 0.0 ? 2.0 * u : 0.0;
        case Activation::ReLU: return u > 0.0 ? 1.0 : 0.0;
        case Activation::Tanh: {
            const double t = std::tanh(u);
            return 1.0 - t * t;
        }
    }
    return 0.0;
}

double activation_d2(Activation a, double u) {
    switch (a) {
        case Activation::ReCU: return u > 0.0 ? 6.0 * u : 0.0;
        case Activation::ReQU: return u > 0.0 ? 2.0 : 0.0;
        case Activation::ReLU: return 0.0;
        case Activation::Tanh: {
            const double t = std::tanh(u);
            return -2.0 * t * (1.0 - t * t);
        }
    }
    return 0.0;
}

double activation_d3(Activation a, double u) {
    switch (a) {
        case Activation::ReCU: return u > 0.0 ? 6.0 : 0.0;
        case Activation::ReQU: return 0.0;
        case Activation::ReLU: return 0.0;
        case Activation::Tanh: {
            const double t = std::tanh(u);
            const double s = 1.0 - t * t;
            return s * (6.0 * t * t - 2.0);
        }
    }
    return 0.0;
}

bool activation_supports_laplacian(Activation a) { return a != Activation::ReLU; }

namespace {

using RowMajorMap =
    Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

void apply_activation(Activation a, const Eigen::VectorXd& u, Eigen::VectorXd& h,
                      Eigen::VectorXd& d1, bool need_d1, Eigen::VectorXd& d2, bool need_d2) {
    for (Eigen::Index i = 0; i < u.size(); ++i) {
        h[i] = activation_value(a, u[i]);
        if (need_d1) d1[i] = activation_d1(a, u[i]);
        if (need_d2) d2[i] = activation_d2(a, u[i]);
    }
}

}  // namespace

/// Per-thread evaluation buffers; indices follow the hidden-layer numbering
/// l = 1..L (slot l-1). J holds the pre-activation input Jacobians for l >= 2;
/// layer 1 reads W_0 directly.
struct MultilayerPerceptron::Workspace {
    explicit Workspace(const MultilayerPerceptron& net) {
        const int L = net.hidden_layers();
        const int d = net.dim();
        const auto& arch = net.architecture();
        u.resize(L);
        h.resize(L);
        d1.resize(L);
        d2.resize(L);
        m.resize(L);
        s.resize(L);
        Ws.resize(L);
        hbar.resize(L);
        dbar.resize(L);
        ebar.resize(L);
        sbar.resize(L);
        mbar.resize(L);
        ubar.resize(L);
        J.resize(L);
        Jbar.resize(L);
        P.resize(L);
        for (int l = 1; l <= L; ++l) {
            const int p = arch[static_cast<std::size_t>(l)];
            u[l - 1].resize(p);
            h[l - 1].resize(p);
            d1[l - 1].resize(p);
            d2[l - 1].resize(p);
            m[l - 1].resize(p);
            s[l - 1].resize(p);
            Ws[l - 1].resize(p);
            hbar[l - 1].resize(p);
            dbar[l - 1].resize(p);
            ebar[l - 1].resize(p);
            sbar[l - 1].resize(p);
            mbar[l - 1].resize(p);
            ubar[l - 1].resize(p);
            J[l - 1].resize(p, d);
            Jbar[l - 1].resize(p, d);
            P[l - 1].resize(p, d);
        }
        k.resize(arch[static_cast<std::size_t>(L)]);
    }

    std::vector<Eigen::VectorXd> u, h, d1, d2, m, s, Ws;
    std::vector<Eigen::VectorXd> hbar, dbar, ebar, sbar, mbar, ubar;
    std::vector<Eigen::MatrixXd> J, Jbar, P;
    Eigen::VectorXd k;
};

namespace {

struct MlpGradientScratch final : GradientScratch {
    explicit MlpGradientScratch(const MultilayerPerceptron& net) : net_arch(net.architecture()) {}
    std::vector<int> net_arch;
    std::unique_ptr<MultilayerPerceptron::Workspace> ws;
};

}  // namespace

MultilayerPerceptron::MultilayerPerceptron(std::vector<int> architecture, Activation activation,
                                           bool with_bias)
    : architecture_(std::move(architecture)), activation_(activation), has_bias_(with_bias) {
    if (architecture_.size() < 3) {
        throw ConfigError("network needs at least one hidden layer (architecture p_0..p_{L+1})");
    }
    if (architecture_.back() != 1) throw ConfigError("network output dimension must be 1");
    for (int p : architecture_) {
        if (p < 1) throw ConfigError("network layer widths must be positive");
    }
    const int L = hidden_layers();
    weights_.reserve(static_cast<std::size_t>(L) + 1);
    for (int i = 0; i <= L; ++i) {
        weights_.emplace_back(Eigen::MatrixXd::Zero(architecture_[static_cast<std::size_t>(i + 1)],
                                                    architecture_[static_cast<std::size_t>(i)]));
    }
    shifts_.reserve(static_cast<std::size_t>(L));
    for (int l = 1; l <= L; ++l) {
        shifts_.emplace_back(Eigen::VectorXd::Zero(architecture_[static_cast<std::size_t>(l)]));
    }
}

MultilayerPerceptron MultilayerPerceptron::random(std::vector<int> architecture,
                                                  Activation activation, bool with_bias,
                                                  std::uint64_t seed) {
    MultilayerPerceptron net(std::move(architecture), activation, with_bias);
    net.init_seed_ = seed;
    const int L = net.hidden_layers();
    for (int i = 0; i <= L; ++i) {
        Eigen::MatrixXd& W = net.weights_[static_cast<std::size_t>(i)];
        const double bound = std::sqrt(6.0 / static_cast<double>(W.rows() + W.cols()));
        Rng rng(seed, kStreamInit, static_cast<std::uint64_t>(i));
        for (Eigen::Index r = 0; r < W.rows(); ++r) {
            for (Eigen::Index c = 0; c < W.cols(); ++c) W(r, c) = rng.uniform(-bound, bound);
        }
    }
    // Shifts are spread uniformly so the activation kinks do not all pass
    // through the origin; the output bias starts at zero.
    for (int l = 1; l <= L; ++l) {
        Eigen::VectorXd& v = net.shifts_[static_cast<std::size_t>(l - 1)];
        Rng rng(seed, kStreamInit, static_cast<std::uint64_t>(L + 1 + l));
        for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = rng.uniform(-0.5, 0.5);
    }
    return net;
}

void MultilayerPerceptron::check_input(const Eigen::Ref<const Eigen::VectorXd>& x) const {
    if (x.size() != dim()) {
        throw ConfigError("network expects input dimension " + std::to_string(dim()) + ", got " +
                          std::to_string(x.size()));
    }
}

void MultilayerPerceptron::run_forward(const Eigen::Ref<const Eigen::VectorXd>& x, Workspace& ws,
                                       bool laplacian_chain, bool need_d2) const {
    const int L = hidden_layers();
    const bool with_laplacian = laplacian_chain;
    need_d2 = need_d2 || laplacian_chain;
    for (int l = 1; l <= L; ++l) {
        const auto idx = static_cast<std::size_t>(l - 1);
        if (l == 1) {
            ws.u[0].noalias() = weights_[0] * x;
        } else {
            ws.u[idx].noalias() = weights_[idx] * ws.h[idx - 1];
        }
        ws.u[idx] -= shifts_[idx];
        apply_activation(activation_, ws.u[idx], ws.h[idx], ws.d1[idx], true, ws.d2[idx], need_d2);
        if (l >= 2) {
            const Eigen::MatrixXd& J_prev = l == 2 ? weights_[0] : ws.J[idx - 1];
            ws.J[idx].noalias() = weights_[idx] * (ws.d1[idx - 1].asDiagonal() * J_prev);
        }
        if (with_laplacian) {
            const Eigen::MatrixXd& J_here = l == 1 ? weights_[0] : ws.J[idx];
            ws.m[idx] = J_here.rowwise().squaredNorm();
            if (l == 1) {
                ws.s[0] = ws.d2[0].cwiseProduct(ws.m[0]);
            } else {
                ws.Ws[idx].noalias() = weights_[idx] * ws.s[idx - 1];
                ws.s[idx] = ws.d2[idx].cwiseProduct(ws.m[idx]) +
                            ws.d1[idx].cwiseProduct(ws.Ws[idx]);
            }
        }
    }
}

double MultilayerPerceptron::forward(const Eigen::Ref<const Eigen::VectorXd>& x) const {
    check_input(x);
    const int L = hidden_layers();
    Eigen::VectorXd h = weights_[0] * x;
    Eigen::VectorXd next;
    for (int l = 1; l <= L; ++l) {
        const auto idx = static_cast<std::size_t>(l - 1);
        h -= shifts_[idx];
        for (Eigen::Index i = 0; i < h.size(); ++i) h[i] = activation_value(activation_, h[i]);
        next.noalias() = weights_[idx + 1] * h;
        h.swap(next);
    }
    return h[0] + (has_bias_ ? bias_ : 0.0);
}

Eigen::VectorXd MultilayerPerceptron::input_gradient(
    const Eigen::Ref<const Eigen::VectorXd>& x) const {
    check_input(x);
    Workspace ws(*this);
    run_forward(x, ws, false, false);
    const int L = hidden_layers();
    const auto li = static_cast<std::size_t>(L - 1);
    const Eigen::MatrixXd& J_top = L == 1 ? weights_[0] : ws.J[li];
    const Eigen::VectorXd wl = weights_[static_cast<std::size_t>(L)].row(0).transpose();
    return J_top.transpose() * ws.d1[li].cwiseProduct(wl);
}

void MultilayerPerceptron::gradient(const Eigen::Ref<const Eigen::VectorXd>& x,
                                    Eigen::Ref<Eigen::VectorXd> out) const {
    out = input_gradient(x);
}

double MultilayerPerceptron::input_laplacian(const Eigen::Ref<const Eigen::VectorXd>& x) const {
    check_input(x);
    if (!activation_supports_laplacian(activation_)) {
        throw UnsupportedError("input_laplacian requires a C^2 activation; ReLU is not supported");
    }
    Workspace ws(*this);
    run_forward(x, ws, true, true);
    const int L = hidden_layers();
    return weights_[static_cast<std::size_t>(L)].row(0).dot(ws.s[static_cast<std::size_t>(L - 1)]);
}

void MultilayerPerceptron::joint_eval(const Eigen::Ref<const Eigen::VectorXd>& x, Workspace& ws,
                                      Eigen::Ref<Eigen::VectorXd> grad_out, double& lap_out) const {
    run_forward(x, ws, true, true);
    const int L = hidden_layers();
    const auto li = static_cast<std::size_t>(L - 1);
    const Eigen::MatrixXd& J_top = L == 1 ? weights_[0] : ws.J[li];
    const Eigen::VectorXd wl = weights_[static_cast<std::size_t>(L)].row(0).transpose();
    grad_out = J_top.transpose() * ws.d1[li].cwiseProduct(wl);
    lap_out = wl.dot(ws.s[li]);
}

void MultilayerPerceptron::gradient_and_laplacian(const Eigen::Ref<const Eigen::VectorXd>& x,
                                                  Eigen::Ref<Eigen::VectorXd> grad_out,
                                                  double& lap_out) const {
    check_input(x);
    if (!activation_supports_laplacian(activation_)) {
        throw UnsupportedError("Laplacian requires a C^2 activation; ReLU is not supported");
    }
    Workspace ws(*this);
    joint_eval(x, ws, grad_out, lap_out);
}

void MultilayerPerceptron::gradient_and_laplacian(const Eigen::Ref<const Eigen::VectorXd>& x,
                                                  Eigen::Ref<Eigen::VectorXd> grad_out,
                                                  double& lap_out, GradientScratch& scratch) const {
    check_input(x);
    if (!activation_supports_laplacian(activation_)) {
        throw UnsupportedError("Laplacian requires a C^2 activation; ReLU is not supported");
    }
    auto* mlp_scratch = dynamic_cast<MlpGradientScratch*>(&scratch);
    if (mlp_scratch == nullptr || mlp_scratch->net_arch != architecture_) {
        throw ConfigError("gradient scratch does not match this network");
    }
    joint_eval(x, *mlp_scratch->ws, grad_out, lap_out);
}

void MultilayerPerceptron::derivative_rows(const Eigen::Ref<const Eigen::MatrixXd>& points,
                                           Eigen::MatrixXd& gradients,
                                           Eigen::VectorXd& laplacians) const {
    if (points.cols() != dim()) throw ConfigError("derivative_rows: wrong point dimension");
    if (!activation_supports_laplacian(activation_)) {
        throw UnsupportedError("Laplacian requires a C^2 activation; ReLU is not supported");
    }
    gradients.resize(points.rows(), points.cols());
    laplacians.resize(points.rows());
    Workspace ws(*this);
    Eigen::VectorXd x(dim());
    Eigen::VectorXd g(dim());
    for (Eigen::Index i = 0; i < points.rows(); ++i) {
        x = points.row(i).transpose();
        double lap = 0.0;
        joint_eval(x, ws, g, lap);
        gradients.row(i) = g.transpose();
        laplacians[i] = lap;
    }
}

double MultilayerPerceptron::min_kink_distance(const Eigen::Ref<const Eigen::VectorXd>& x) const {
    check_input(x);
    if (activation_ == Activation::Tanh) return std::numeric_limits<double>::infinity();
    Workspace ws(*this);
    run_forward(x, ws, false, false);
    double dist = std::numeric_limits<double>::infinity();
    for (int l = 1; l <= hidden_layers(); ++l) {
        dist = std::min(dist, ws.u[static_cast<std::size_t>(l - 1)].cwiseAbs().minCoeff());
    }
    return dist;
}

Eigen::MatrixXd MultilayerPerceptron::input_hessian(
    const Eigen::Ref<const Eigen::VectorXd>& x) const {
    check_input(x);
    if (!activation_supports_laplacian(activation_)) {
        throw UnsupportedError("input_hessian requires a C^2 activation; ReLU is not supported");
    }
    Workspace ws(*this);
    run_forward(x, ws, true, true);
    const int L = hidden_layers();
    // Per-unit rank-one expansion: H = sum_l J^l^T diag(beta^l .* sigma''(u^l)) J^l
    // with beta^l = dy/dh^l the downstream linear sensitivity.
    std::vector<Eigen::VectorXd> beta(static_cast<std::size_t>(L));
    beta[static_cast<std::size_t>(L - 1)] = weights_[static_cast<std::size_t>(L)].row(0).transpose();
    for (int l = L - 1; l >= 1; --l) {
        beta[static_cast<std::size_t>(l - 1)].noalias() =
            weights_[static_cast<std::size_t>(l)].transpose() *
            ws.d1[static_cast<std::size_t>(l)].cwiseProduct(beta[static_cast<std::size_t>(l)]);
    }
    Eigen::MatrixXd hess = Eigen::MatrixXd::Zero(dim(), dim());
    for (int l = 1; l <= L; ++l) {
        const auto idx = static_cast<std::size_t>(l - 1);
        const Eigen::MatrixXd& J_here = l == 1 ? weights_[0] : ws.J[idx];
        hess.noalias() +=
            J_here.transpose() * beta[idx].cwiseProduct(ws.d2[idx]).asDiagonal() * J_here;
    }
    return hess;
}

Eigen::Index MultilayerPerceptron::parameter_count() const {
    Eigen::Index count = 0;
    for (const auto& W : weights_) count += W.size();
    for (const auto& v : shifts_) count += v.size();
    if (has_bias_) count += 1;
    return count;
}

Eigen::VectorXd MultilayerPerceptron::parameters() const {
    Eigen::VectorXd theta(parameter_count());
    Eigen::Index off = 0;
    const int L = hidden_layers();
    for (int i = 0; i <= L; ++i) {
        const Eigen::MatrixXd& W = weights_[static_cast<std::size_t>(i)];
        for (Eigen::Index r = 0; r < W.rows(); ++r) {
            for (Eigen::Index c = 0; c < W.cols(); ++c) theta[off++] = W(r, c);
        }
        if (i + 1 <= L) {
            const Eigen::VectorXd& v = shifts_[static_cast<std::size_t>(i)];
            theta.segment(off, v.size()) = v;
            off += v.size();
        }
    }
    if (has_bias_) theta[off++] = bias_;
    return theta;
}

void MultilayerPerceptron::set_parameters(const Eigen::Ref<const Eigen::VectorXd>& theta) {
    if (theta.size() != parameter_count()) {
        throw ConfigError("parameter vector has wrong length");
    }
    Eigen::Index off = 0;
    const int L = hidden_layers();
    for (int i = 0; i <= L; ++i) {
        Eigen::MatrixXd& W = weights_[static_cast<std::size_t>(i)];
        for (Eigen::Index r = 0; r < W.rows(); ++r) {
            for (Eigen::Index c = 0; c < W.cols(); ++c) W(r, c) = theta[off++];
        }
        if (i + 1 <= L) {
            Eigen::VectorXd& v = shifts_[static_cast<std::size_t>(i)];
            v = theta.segment(off, v.size());
            off += v.size();
        }
    }
    if (has_bias_) bias_ = theta[off++];
}

std::unique_ptr<GradientScratch> MultilayerPerceptron::make_gradient_scratch() const {
    auto scratch = std::make_unique<MlpGradientScratch>(*this);
    scratch->ws = std::make_unique<Workspace>(*this);
    return scratch;
}

void MultilayerPerceptron::accumulate_parameter_gradient(
    const Eigen::Ref<const Eigen::VectorXd>& x, double w_value,
    const Eigen::Ref<const Eigen::VectorXd>& w_gradient, double w_laplacian,
    GradientScratch& scratch, Eigen::Ref<Eigen::VectorXd> grad) const {
    check_input(x);
    if (grad.size() != parameter_count()) throw ConfigError("gradient buffer has wrong length");
    auto* mlp_scratch = dynamic_cast<MlpGradientScratch*>(&scratch);
    if (mlp_scratch == nullptr || mlp_scratch->net_arch != architecture_) {
        throw ConfigError("gradient scratch does not match this network");
    }
    Workspace& ws = *mlp_scratch->ws;

    const bool has_g = w_gradient.size() > 0;
    if (has_g && w_gradient.size() != dim()) {
        throw ConfigError("gradient weight vector has wrong dimension");
    }
    const bool has_l = w_laplacian != 0.0;
    const bool has_y = w_value != 0.0;
    if (has_l && !activation_supports_laplacian(activation_)) {
        throw UnsupportedError("Laplacian requires a C^2 activation; ReLU is not supported");
    }
    if (!has_g && !has_l && !has_y) return;

    run_forward(x, ws, has_l, has_g || has_l);

    const int L = hidden_layers();
    const auto li = static_cast<std::size_t>(L - 1);
    const Eigen::VectorXd wl = weights_[static_cast<std::size_t>(L)].row(0).transpose();
    const Eigen::MatrixXd& J_top = L == 1 ? weights_[0] : ws.J[li];

    // Flat gradient segments; layout mirrors parameters().
    double* g = grad.data();
    std::vector<Eigen::Index> w_off(static_cast<std::size_t>(L) + 1);
    std::vector<Eigen::Index> v_off(static_cast<std::size_t>(L));
    {
        Eigen::Index off = 0;
        for (int i = 0; i <= L; ++i) {
            w_off[static_cast<std::size_t>(i)] = off;
            off += weights_[static_cast<std::size_t>(i)].size();
            if (i + 1 <= L) {
                v_off[static_cast<std::size_t>(i)] = off;
                off += shifts_[static_cast<std::size_t>(i)].size();
            }
        }
    }
    auto weight_grad = [&](int i) {
        const Eigen::MatrixXd& W = weights_[static_cast<std::size_t>(i)];
        return RowMajorMap(g + w_off[static_cast<std::size_t>(i)], W.rows(), W.cols());
    };
    auto shift_grad = [&](int l) {
        const Eigen::VectorXd& v = shifts_[static_cast<std::size_t>(l - 1)];
        return Eigen::Map<Eigen::VectorXd>(g + v_off[static_cast<std::size_t>(l - 1)], v.size());
    };

    for (int l = 1; l <= L; ++l) {
        const auto idx = static_cast<std::size_t>(l - 1);
        ws.hbar[idx].setZero();
        ws.dbar[idx].setZero();
        ws.ebar[idx].setZero();
        ws.mbar[idx].setZero();
        if (has_g || has_l) ws.Jbar[idx].setZero();
    }

    // Seeds at the output.
    if (has_y) {
        weight_grad(L).row(0) += w_value * ws.h[li].transpose();
        if (has_bias_) g[parameter_count() - 1] += w_value;
        ws.hbar[li] += w_value * wl;
    }
    if (has_g) {
        ws.k.noalias() = J_top * w_gradient;
        weight_grad(L).row(0) += ws.d1[li].cwiseProduct(ws.k).transpose();
        ws.dbar[li] += wl.cwiseProduct(ws.k);
        ws.Jbar[li] += ws.d1[li].cwiseProduct(wl) * w_gradient.transpose();
    }
    if (has_l) {
        weight_grad(L).row(0) += w_laplacian * ws.s[li].transpose();
    }

    // Reverse sweep of the Laplacian recursion s^l.
    if (has_l) {
        ws.sbar[li] = w_laplacian * wl;
        for (int l = L; l >= 1; --l) {
            const auto idx = static_cast<std::size_t>(l - 1);
            ws.ebar[idx] += ws.sbar[idx].cwiseProduct(ws.m[idx]);
            ws.mbar[idx] += ws.sbar[idx].cwiseProduct(ws.d2[idx]);
            if (l >= 2) {
                ws.dbar[idx] += ws.sbar[idx].cwiseProduct(ws.Ws[idx]);
                const Eigen::VectorXd sd = ws.sbar[idx].cwiseProduct(ws.d1[idx]);
                weight_grad(l - 1) += sd * ws.s[idx - 1].transpose();
                ws.sbar[idx - 1].noalias() = weights_[idx].transpose() * sd;
            }
        }
    }

    // Reverse sweep of the Jacobian recursion J^l.
    if (has_g || has_l) {
        for (int l = L; l >= 1; --l) {
            const auto idx = static_cast<std::size_t>(l - 1);
            const Eigen::MatrixXd& J_here = l == 1 ? weights_[0] : ws.J[idx];
            if (has_l) ws.Jbar[idx] += 2.0 * ws.mbar[idx].asDiagonal() * J_here;
            if (l >= 2) {
                const Eigen::MatrixXd& J_prev = l == 2 ? weights_[0] : ws.J[idx - 1];
                weight_grad(l - 1) +=
                    ws.Jbar[idx] * (J_prev.transpose() * ws.d1[idx - 1].asDiagonal());
                ws.P[idx - 1].noalias() = weights_[idx].transpose() * ws.Jbar[idx];
                ws.dbar[idx - 1] += ws.P[idx - 1].cwiseProduct(J_prev).rowwise().sum();
                ws.Jbar[idx - 1] += ws.d1[idx - 1].asDiagonal() * ws.P[idx - 1];
            } else {
                weight_grad(0) += ws.Jbar[0];
            }
        }
    }

    // Activation chain: u^l = W_{l-1} h^{l-1} - v_l.
    for (int l = L; l >= 1; --l) {
        const auto idx = static_cast<std::size_t>(l - 1);
        ws.ubar[idx] = ws.hbar[idx].cwiseProduct(ws.d1[idx]);
        if (has_g || has_l) ws.ubar[idx] += ws.dbar[idx].cwiseProduct(ws.d2[idx]);
        if (has_l) {
            for (Eigen::Index i = 0; i < ws.ubar[idx].size(); ++i) {
                ws.ubar[idx][i] += ws.ebar[idx][i] * activation_d3(activation_, ws.u[idx][i]);
            }
        }
        shift_grad(l) -= ws.ubar[idx];
        if (l == 1) {
            weight_grad(0) += ws.ubar[0] * x.transpose();
        } else {
            weight_grad(l - 1) += ws.ubar[idx] * ws.h[idx - 1].transpose();
            ws.hbar[idx - 1].noalias() += weights_[idx].transpose() * ws.ubar[idx];
        }
    }
}

std::unique_ptr<TrainablePhi> MultilayerPerceptron::clone() const {
    return std::make_unique<MultilayerPerceptron>(*this);
}

std::string MultilayerPerceptron::to_json() const {
    nlohmann::json j;
    j["architecture"] = architecture_;
    j["activation"] = activation_name(activation_);
    j["seed"] = init_seed_;
    nlohmann::json weights = nlohmann::json::array();
    for (const auto& W : weights_) {
        std::vector<double> flat;
        flat.reserve(static_cast<std::size_t>(W.size()));
        for (Eigen::Index r = 0; r < W.rows(); ++r) {
            for (Eigen::Index c = 0; c < W.cols(); ++c) flat.push_back(W(r, c));
        }
        weights.push_back(flat);
    }
    j["weights"] = std::move(weights);
    nlohmann::json shifts = nlohmann::json::array();
    for (const auto& v : shifts_) {
        shifts.push_back(std::vector<double>(v.data(), v.data() + v.size()));
    }
    j["shifts"] = std::move(shifts);
    if (has_bias_) {
        j["bias"] = bias_;
    } else {
        j["bias"] = nullptr;
    }
    return j.dump(2);
}

MultilayerPerceptron MultilayerPerceptron::from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(std::string("network checkpoint parse error: ") + e.what());
    }
    try {
        const auto arch = j.at("architecture").get<std::vector<int>>();
        const Activation act = activation_from_name(j.at("activation").get<std::string>());
        const bool with_bias = !j.at("bias").is_null();
        MultilayerPerceptron net(arch, act, with_bias);
        net.init_seed_ = j.value("seed", std::uint64_t{0});
        const auto& weights = j.at("weights");
        if (weights.size() != net.weights_.size()) {
            throw ConfigError("checkpoint weight count does not match architecture");
        }
        for (std::size_t i = 0; i < net.weights_.size(); ++i) {
            const auto flat = weights[i].get<std::vector<double>>();
            Eigen::MatrixXd& W = net.weights_[i];
            if (static_cast<Eigen::Index>(flat.size()) != W.size()) {
                throw ConfigError("checkpoint weight matrix " + std::to_string(i) +
                                  " has wrong size");
            }
            std::size_t pos = 0;
            for (Eigen::Index r = 0; r < W.rows(); ++r) {
                for (Eigen::Index c = 0; c < W.cols(); ++c) W(r, c) = flat[pos++];
            }
        }
        const auto& shifts = j.at("shifts");
        if (shifts.size() != net.shifts_.size()) {
            throw ConfigError("checkpoint shift count does not match architecture");
        }
        for (std::size_t i = 0; i < net.shifts_.size(); ++i) {
            const auto vals = shifts[i].get<std::vector<double>>();
            if (static_cast<Eigen::Index>(vals.size()) != net.shifts_[i].size()) {
                throw ConfigError("checkpoint shift vector " + std::to_string(i) +
                                  " has wrong size");
            }
            net.shifts_[i] = Eigen::Map<const Eigen::VectorXd>(
                vals.data(), static_cast<Eigen::Index>(vals.size()));
        }
        if (with_bias) net.bias_ = j.at("bias").get<double>();
        return net;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("network checkpoint field error: ") + e.what());
    }
}

void MultilayerPerceptron::save_json(const std::string& path) const {
    atomic_write_file(path, to_json() + "\n");
}

MultilayerPerceptron MultilayerPerceptron::load_json(const std::string& path) {
    return from_json(read_file(path));
}

}  // namespace steincv
