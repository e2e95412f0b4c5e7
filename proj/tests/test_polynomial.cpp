#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "errors.hpp"
#include "esvm.hpp"
#include "oracles.hpp"
#include "polynomial.hpp"
#include "rng.hpp"
#include "sampler.hpp"
#include "stein.hpp"
#include "targets.hpp"

using namespace steincv;

TEST_CASE("basis size is C(d + degree, degree) in graded-lex order") {
    CHECK(PolynomialPhi(2, 2).basis_size() == 6);
    CHECK(PolynomialPhi(2, 4).basis_size() == 15);
    CHECK(PolynomialPhi(6, 4).basis_size() == 210);
    CHECK(PolynomialPhi(9, 4).basis_size() == 715);
    CHECK(PolynomialPhi(3, 0).basis_size() == 1);

    // d=2, degree 2: 1, x1, x2, x1^2, x1 x2, x2^2.
    const PolynomialPhi phi(2, 2);
    const std::vector<std::vector<int>> expected = {{0, 0}, {1, 0}, {0, 1},
                                                    {2, 0}, {1, 1}, {0, 2}};
    CHECK(phi.exponents() == expected);

    CHECK_THROWS_AS(PolynomialPhi(2, 5), ConfigError);
    CHECK_THROWS_AS(PolynomialPhi(2, -1), ConfigError);
}

TEST_CASE("value, gradient and laplacian of a known polynomial") {
    // phi = 3 + 2 x1 - x2 + 0.5 x1^2 + x1 x2
    PolynomialPhi phi(2, 2);
    Eigen::VectorXd coeffs(6);
    coeffs << 3.0, 2.0, -1.0, 0.5, 1.0, 0.0;
    phi.set_parameters(coeffs);

    Eigen::VectorXd x(2);
    x << 1.0, 2.0;
    CHECK(phi.value(x) == doctest::Approx(3 + 2 - 2 + 0.5 + 2).epsilon(1e-15));
    const Eigen::VectorXd grad = phi.gradient(x);
    CHECK(grad[0] == doctest::Approx(2 + 1.0 + 2.0).epsilon(1e-15));  // 2 + x1 + x2
    CHECK(grad[1] == doctest::Approx(-1 + 1.0).epsilon(1e-15));       // -1 + x1
    CHECK(phi.laplacian(x) == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("analytic derivatives match finite differences at 100 random points") {
    Rng rng(17);
    for (int d : {2, 4}) {
        PolynomialPhi phi(d, 4);
        Eigen::VectorXd coeffs(phi.basis_size());
        for (Eigen::Index i = 0; i < coeffs.size(); ++i) coeffs[i] = rng.uniform(-1, 1);
        phi.set_parameters(coeffs);
        auto f = [&](const Eigen::VectorXd& p) { return phi.value(p); };
        for (int rep = 0; rep < 50; ++rep) {
            Eigen::VectorXd x(d);
            for (int j = 0; j < d; ++j) x[j] = rng.uniform(-2, 2);
            const Eigen::VectorXd fd = oracles::central_diff_gradient(f, x, 1e-5);
            CHECK(oracles::vec_rel_err(phi.gradient(x), fd) < 1e-7);
            const double fd_lap = oracles::five_point_hessian_trace(f, x, 1e-2);
            CHECK(oracles::rel_err(phi.laplacian(x), fd_lap) < 1e-7);
        }
    }
}

TEST_CASE("parameter gradient is the monomial feature vector") {
    PolynomialPhi phi(2, 2);
    Rng rng(23);
    Eigen::VectorXd x(2);
    x << 0.7, -1.2;
    Eigen::VectorXd w_gamma(2);
    w_gamma << 0.5, 2.0;
    Eigen::VectorXd grad = Eigen::VectorXd::Zero(phi.basis_size());
    auto scratch = phi.make_gradient_scratch();
    phi.accumulate_parameter_gradient(x, 1.0, w_gamma, 0.25, *scratch, grad);

    Eigen::VectorXd values(phi.basis_size());
    Eigen::MatrixXd grads(phi.basis_size(), 2);
    Eigen::VectorXd laps(phi.basis_size());
    phi.monomial_derivatives(x, values, grads, laps);
    const Eigen::VectorXd expected = values + grads * w_gamma + 0.25 * laps;
    CHECK((grad - expected).lpNorm<Eigen::Infinity>() < 1e-14);
}

TEST_CASE("exact fit solves the gaussian linear problem") {
    const GaussianTarget target(2);
    SamplerConfig cfg;
    cfg.step_size = 0.1;
    cfg.n_burn = 1000;
    cfg.n_train = 4000;
    cfg.seed = 3;
    const Chain chain = generate_chain(target, cfg, ChainRole::Train, 0);
    const TargetFunctional f = TargetFunctional::coordinate(1);
    const Eigen::VectorXd f_vals = f.evaluate_rows(chain.states);
    SpectralVarianceEstimator est;
    est.truncation_point = 10;

    const PolynomialPhi fitted = fit_polynomial_exact(chain.states, f_vals, target, est, 1);
    // For f = X_1 under N(0, I), phi* = -x_1: coefficient layout (1, x1, x2).
    const Eigen::VectorXd coeffs = fitted.parameters();
    CHECK(coeffs[0] == 0.0);
    CHECK(coeffs[1] == doctest::Approx(-1.0).epsilon(1e-6));
    CHECK(std::abs(coeffs[2]) < 1e-6);
    CHECK(esvm_loss(chain, f, fitted, target, est) < 1e-12);
}

TEST_CASE("exact fit is a stationary point: no feature improves it") {
    const GaussianTarget target(2);
    SamplerConfig cfg;
    cfg.step_size = 0.1;
    cfg.n_burn = 500;
    cfg.n_train = 2000;
    cfg.seed = 5;
    const Chain chain = generate_chain(target, cfg, ChainRole::Train, 0);
    const TargetFunctional f = TargetFunctional::coordinate_square(2);
    const Eigen::VectorXd f_vals = f.evaluate_rows(chain.states);
    SpectralVarianceEstimator est;
    est.truncation_point = 12;

    PolynomialPhi fitted = fit_polynomial_exact(chain.states, f_vals, target, est, 3);
    const double loss = esvm_loss(chain, f, fitted, target, est);
    CHECK(loss < spectral_variance(
                     std::span<const double>(f_vals.data(),
                                             static_cast<std::size_t>(f_vals.size())),
                     est));

    // Perturbing any coefficient does not decrease the loss (quadratic form).
    Rng rng(6);
    Eigen::VectorXd coeffs = fitted.parameters();
    for (int rep = 0; rep < 10; ++rep) {
        Eigen::VectorXd perturbed = coeffs;
        const auto idx = 1 + static_cast<Eigen::Index>(rng.next_u64() %
                                                       static_cast<std::uint64_t>(coeffs.size() - 1));
        perturbed[idx] += rng.uniform(-0.1, 0.1);
        PolynomialPhi other = fitted;
        other.set_parameters(perturbed);
        CHECK(esvm_loss(chain, f, other, target, est) >= loss - 1e-12);
    }
}

TEST_CASE("gradient training approaches the exact solution") {
    const GaussianTarget target(2);
    SamplerConfig cfg;
    cfg.step_size = 0.1;
    cfg.n_burn = 500;
    cfg.n_train = 2000;
    cfg.seed = 11;
    const Chain chain = generate_chain(target, cfg, ChainRole::Train, 0);
    const TargetFunctional f = TargetFunctional::coordinate(1);
    const Eigen::VectorXd f_vals = f.evaluate_rows(chain.states);
    SpectralVarianceEstimator est;
    est.truncation_point = 10;

    const PolynomialPhi exact = fit_polynomial_exact(chain.states, f_vals, target, est, 1);
    const double exact_loss = esvm_loss(chain, f, exact, target, est);
    const double plain = spectral_variance(
        std::span<const double>(f_vals.data(), static_cast<std::size_t>(f_vals.size())), est);

    PolynomialPhi trained(2, 1);
    TrainOptions opts;
    opts.epochs = 600;
    opts.adam.learning_rate = 1e-2;
    opts.adam.weight_decay = 0.0;
    const TrainResult result = train(chain, f, trained, target, est, opts);
    CHECK_FALSE(result.aborted);
    const double gd_loss = esvm_loss(chain, f, trained, target, est);

    // Exact solve is the argmin; gradient descent lands within 5% of the
    // uncontrolled variance scale of it.
    CHECK(exact_loss <= gd_loss + 1e-12);
    CHECK(std::abs(gd_loss - exact_loss) < 0.05 * plain);
}

TEST_CASE("degree-0 polynomial yields the zero control variate") {
    const GaussianTarget target(2);
    SamplerConfig cfg;
    cfg.step_size = 0.1;
    cfg.n_burn = 100;
    cfg.n_train = 500;
    cfg.seed = 2;
    const Chain chain = generate_chain(target, cfg, ChainRole::Train, 0);
    const TargetFunctional f = TargetFunctional::coordinate_square(2);
    const Eigen::VectorXd f_vals = f.evaluate_rows(chain.states);
    SpectralVarianceEstimator est;
    est.truncation_point = 8;
    const PolynomialPhi fitted = fit_polynomial_exact(chain.states, f_vals, target, est, 0);
    const double plain = spectral_variance(
        std::span<const double>(f_vals.data(), static_cast<std::size_t>(f_vals.size())), est);
    CHECK(esvm_loss(chain, f, fitted, target, est) == doctest::Approx(plain).epsilon(1e-15));
}
