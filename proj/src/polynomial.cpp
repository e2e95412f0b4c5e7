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
#include "polynomial.hpp"

#include <cmath>

#include "errors.hpp"

namespace steincv {

namespace {

double ipow(double x, int k) {
    double r = 1.0;
    for (int i = 0; i < k; ++i) r *= x;
    return r;
}

// Exponent tuples of total degree exactly t, lexicographically descending in
// the leading variables (x_1 before x_2, ...).
void enumerate_degree(int dim, int t, std::vector<int>& current, int position, int remaining,
                      std::vector<std::vector<int>>& out) {
    if (position == dim - 1) {
        current[static_cast<std::size_t>(position)] = remaining;
        out.push_back(current);
        return;
    }
    for (int e = remaining; e >= 0; --e) {
        current[static_cast<std::size_t>(position)] = e;
        enumerate_degree(dim, t, current, position + 1, remaining - e, out);
    }
}

}  // namespace

PolynomialPhi::PolynomialPhi(int dim, int degree) : dim_(dim), degree_(degree) {
    if (dim < 1) throw ConfigError("polynomial dimension must be positive");
    if (degree < 0 || degree > 4) throw ConfigError("polynomial degree must lie in 0..4");
    std::vector<int> current(static_cast<std::size_t>(dim), 0);
    for (int t = 0; t <= degree; ++t) enumerate_degree(dim, t, current, 0, t, exponents_);
    coefficients_ = Eigen::VectorXd::Zero(basis_size());
}

void PolynomialPhi::monomial_derivatives(const Eigen::Ref<const Eigen::VectorXd>& x,
                                         Eigen::Ref<Eigen::VectorXd> values,
                                         Eigen::Ref<Eigen::MatrixXd> grads,
                                         Eigen::Ref<Eigen::VectorXd> laps) const {
    if (x.size() != dim_) throw ConfigError("polynomial input has wrong dimension");
    // Powers x_j^k for k = 0..degree are shared by all monomials.
    Eigen::MatrixXd powers(dim_, degree_ + 1);
    for (int j = 0; j < dim_; ++j) {
        powers(j, 0) = 1.0;
        for (int k = 1; k <= degree_; ++k) powers(j, k) = powers(j, k - 1) * x[j];
    }
    for (Eigen::Index a = 0; a < basis_size(); ++a) {
        const std::vector<int>& e = exponents_[static_cast<std::size_t>(a)];
        double mono = 1.0;
        for (int j = 0; j < dim_; ++j) mono *= powers(j, e[static_cast<std::size_t>(j)]);
        values[a] = mono;
        double lap = 0.0;
        for (int j = 0; j < dim_; ++j) {
            const int k = e[static_cast<std::size_t>(j)];
            if (k == 0) {
                grads(a, j) = 0.0;
                continue;
            }
            double rest = 1.0;
            for (int i = 0; i < dim_; ++i) {
                if (i != j) rest *= powers(i, e[static_cast<std::size_t>(i)]);
            }
            grads(a, j) = static_cast<double>(k) * powers(j, k - 1) * rest;
            if (k >= 2) lap += static_cast<double>(k) * static_cast<double>(k - 1) *
                               powers(j, k - 2) * rest;
        }
        laps[a] = lap;
    }
}

double PolynomialPhi::value(const Eigen::Ref<const Eigen::VectorXd>& x) const {
    if (x.size() != dim_) throw ConfigError("polynomial input has wrong dimension");
    double acc = 0.0;
    for (Eigen::Index a = 0; a < basis_size(); ++a) {
        const std::vector<int>& e = exponents_[static_cast<std::size_t>(a)];
        double mono = 1.0;
        for (int j = 0; j < dim_; ++j) mono *= ipow(x[j], e[static_cast<std::size_t>(j)]);
        acc += coefficients_[a] * mono;
    }
    return acc;
}

void PolynomialPhi::gradient(const Eigen::Ref<const Eigen::VectorXd>& x,
                             Eigen::Ref<Eigen::VectorXd> out) const {
    Eigen::VectorXd values(basis_size());
    Eigen::MatrixXd grads(basis_size(), dim_);
    Eigen::VectorXd laps(basis_size());
    monomial_derivatives(x, values, grads, laps);
    out = grads.transpose() * coefficients_;
}

double PolynomialPhi::laplacian(const Eigen::Ref<const Eigen::VectorXd>& x) const {
    Eigen::VectorXd values(basis_size());
    Eigen::MatrixXd grads(basis_size(), dim_);
    Eigen::VectorXd laps(basis_size());
    monomial_derivatives(x, values, grads, laps);
    return laps.dot(coefficients_);
}

void PolynomialPhi::set_parameters(const Eigen::Ref<const Eigen::VectorXd>& theta) {
    if (theta.size() != basis_size()) throw ConfigError("coefficient vector has wrong length");
    coefficients_ = theta;
}

namespace {

struct PolyScratch final : GradientScratch {
    Eigen::VectorXd values;
    Eigen::MatrixXd grads;
    Eigen::VectorXd laps;
};

}  // namespace

std::unique_ptr<GradientScratch> PolynomialPhi::make_gradient_scratch() const {
    auto scratch = std::make_unique<PolyScratch>();
    scratch->values.resize(basis_size());
    scratch->grads.resize(basis_size(), dim_);
    scratch->laps.resize(basis_size());
    return scratch;
}

void PolynomialPhi::accumulate_parameter_gradient(const Eigen::Ref<const Eigen::VectorXd>& x,
                                                  double w_value,
                                                  const Eigen::Ref<const Eigen::VectorXd>& w_gradient,
                                                  double w_laplacian, GradientScratch& scratch,
                                                  Eigen::Ref<Eigen::VectorXd> grad) const {
    auto* ps = dynamic_cast<PolyScratch*>(&scratch);
    if (ps == nullptr || ps->values.size() != basis_size()) {
        throw ConfigError("gradient scratch does not match this polynomial");
    }
    monomial_derivatives(x, ps->values, ps->grads, ps->laps);
    if (w_value != 0.0) grad += w_value * ps->values;
    if (w_gradient.size() > 0) grad += ps->grads * w_gradient;
    if (w_laplacian != 0.0) grad += w_laplacian * ps->laps;
}

std::unique_ptr<TrainablePhi> PolynomialPhi::clone() const {
    return std::make_unique<PolynomialPhi>(*this);
}

PolynomialPhi fit_polynomial_exact(const Eigen::Ref<const Eigen::MatrixXd>& states,
                                   const Eigen::Ref<const Eigen::VectorXd>& f_values,
                                   const Target& target, const SpectralVarianceEstimator& est,
                                   int degree) {
    const Eigen::Index n = states.rows();
    const int d = static_cast<int>(states.cols());
    if (n != f_values.size()) throw ConfigError("state and function series lengths differ");
    const Eigen::Index b_n = static_cast<Eigen::Index>(est.truncation_point);
    if (b_n < 1 || n < b_n) throw ConfigError("truncation point incompatible with series length");

    PolynomialPhi phi(d, degree);
    const Eigen::Index m = phi.basis_size();
    if (m <= 1) return phi;  // constant-only basis: g is identically zero

    // Stein features psi_a(x) = lap m_a(x) - <grad U(x), grad m_a(x)>; the
    // constant monomial (index 0) has psi == 0 and is excluded from the solve.
    Eigen::MatrixXd psi(n, m - 1);
    {
        Eigen::VectorXd values(m);
        Eigen::MatrixXd grads(m, d);
        Eigen::VectorXd laps(m);
        Eigen::VectorXd x(d);
        Eigen::VectorXd grad_u(d);
        for (Eigen::Index k = 0; k < n; ++k) {
            x = states.row(k).transpose();
            phi.monomial_derivatives(x, values, grads, laps);
            target.grad_potential(x, grad_u);
            psi.row(k) = (laps - grads * grad_u).segment(1, m - 1).transpose();
        }
    }

    // Center columns, then form the quadratic V(theta) = (1/n) c^T T c with
    // c = centered(f - psi theta) and T the banded Toeplitz window matrix.
    Eigen::VectorXd f_c = f_values;
    f_c.array() -= f_values.mean();
    const Eigen::RowVectorXd col_means = psi.colwise().mean();
    psi.rowwise() -= col_means;
    Eigen::MatrixXd& psi_c = psi;

    std::vector<double> wplus(static_cast<std::size_t>(b_n)), wminus(static_cast<std::size_t>(b_n));
    for (Eigen::Index s = 0; s < b_n; ++s) {
        const double a = static_cast<double>(s) / static_cast<double>(b_n);
        wplus[static_cast<std::size_t>(s)] = est.window(a);
        wminus[static_cast<std::size_t>(s)] = est.window(-a);
    }
    auto apply_T = [&](const Eigen::MatrixXd& M) {
        Eigen::MatrixXd out = wplus[0] * M;
        for (Eigen::Index s = 1; s < b_n; ++s) {
            const double wp = wplus[static_cast<std::size_t>(s)];
            const double wm = wminus[static_cast<std::size_t>(s)];
            out.topRows(n - s) += wm * M.bottomRows(n - s);
            out.bottomRows(n - s) += wp * M.topRows(n - s);
        }
        return out;
    };

    const Eigen::MatrixXd t_psi = apply_T(psi_c);
    const Eigen::MatrixXd gram = psi_c.transpose() * t_psi;
    const Eigen::VectorXd rhs = t_psi.transpose() * f_c;
    Eigen::LDLT<Eigen::MatrixXd> solver(gram);
    if (solver.info() != Eigen::Success) {
        throw NumericError("polynomial normal equations are not solvable");
    }
    const Eigen::VectorXd theta = solver.solve(rhs);
    Eigen::VectorXd coeffs = Eigen::VectorXd::Zero(m);
    coeffs.segment(1, m - 1) = theta;
    phi.set_parameters(coeffs);
    return phi;
}

}  // namespace steincv
