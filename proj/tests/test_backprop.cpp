#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "adam.hpp"
#include "errors.hpp"
#include "esvm.hpp"
#include "mlp.hpp"
#include "oracles.hpp"
#include "rng.hpp"
#include "sampler.hpp"
#include "targets.hpp"

using namespace steincv;

namespace {

// F(theta) = w_y * value + w_gamma . gradient + w_delta * laplacian at x,
// evaluated through the public derivative entry points.
double functional_at(const MultilayerPerceptron& base, const Eigen::VectorXd& theta,
                     const Eigen::VectorXd& x, double w_y, const Eigen::VectorXd& w_gamma,
                     double w_delta) {
    MultilayerPerceptron net = base;
    net.set_parameters(theta);
    double out = w_y * net.forward(x);
    if (w_gamma.size() > 0) out += w_gamma.dot(net.input_gradient(x));
    if (w_delta != 0.0) out += w_delta * net.input_laplacian(x);
    return out;
}

Eigen::VectorXd analytic_param_gradient(const MultilayerPerceptron& net, const Eigen::VectorXd& x,
                                        double w_y, const Eigen::VectorXd& w_gamma,
                                        double w_delta) {
    Eigen::VectorXd grad = Eigen::VectorXd::Zero(net.parameter_count());
    auto scratch = net.make_gradient_scratch();
    net.accumulate_parameter_gradient(x, w_y, w_gamma, w_delta, *scratch, grad);
    return grad;
}

Eigen::VectorXd fd_param_gradient(const MultilayerPerceptron& net, const Eigen::VectorXd& x,
                                  double w_y, const Eigen::VectorXd& w_gamma, double w_delta,
                                  double h) {
    const Eigen::VectorXd theta0 = net.parameters();
    Eigen::VectorXd theta = theta0;
    Eigen::VectorXd fd(theta0.size());
    for (Eigen::Index i = 0; i < theta0.size(); ++i) {
        theta[i] = theta0[i] + h;
        const double up = functional_at(net, theta, x, w_y, w_gamma, w_delta);
        theta[i] = theta0[i] - h;
        const double dn = functional_at(net, theta, x, w_y, w_gamma, w_delta);
        theta[i] = theta0[i];
        fd[i] = (up - dn) / (2.0 * h);
    }
    return fd;
}

}  // namespace

TEST_CASE("output bias gradient of the forward value is one") {
    const auto net = MultilayerPerceptron::random({2, 4, 1}, Activation::ReCU, true, 3);
    Eigen::VectorXd x(2);
    x << 0.4, -0.9;
    const Eigen::VectorXd grad =
        analytic_param_gradient(net, x, 1.0, Eigen::VectorXd(), 0.0);
    CHECK(grad[net.parameter_count() - 1] == 1.0);
}

TEST_CASE("zero ReCU network has zero weight and shift gradients") {
    MultilayerPerceptron net({2, 4, 1}, Activation::ReCU, true);  // all parameters zero
    Eigen::VectorXd x(2);
    x << 1.3, -0.2;
    const Eigen::VectorXd grad =
        analytic_param_gradient(net, x, 1.0, Eigen::VectorXd(), 0.0);
    // Everything except the output bias vanishes: sigma and sigma' are 0 at 0.
    CHECK(grad.head(grad.size() - 1).lpNorm<Eigen::Infinity>() == 0.0);
    CHECK(grad[grad.size() - 1] == 1.0);
}

TEST_CASE("parameter gradients match finite differences across depths and activations") {
    Rng seeds(50);
    const std::vector<std::vector<int>> archs = {{2, 6, 1}, {3, 5, 4, 1}, {2, 4, 3, 3, 1}};
    for (Activation act : {Activation::ReCU, Activation::ReQU, Activation::Tanh}) {
        for (const auto& arch : archs) {
            const auto net = MultilayerPerceptron::random(arch, act, true, seeds.next_u64());
            Rng rng(seeds.next_u64());
            Eigen::VectorXd x(arch.front());
            for (int j = 0; j < arch.front(); ++j) x[j] = rng.uniform(-1.5, 1.5);
            Eigen::VectorXd w_gamma(arch.front());
            for (int j = 0; j < arch.front(); ++j) w_gamma[j] = rng.uniform(-1.0, 1.0);

            // value path
            {
                const Eigen::VectorXd a =
                    analytic_param_gradient(net, x, 1.0, Eigen::VectorXd(), 0.0);
                const Eigen::VectorXd fd =
                    fd_param_gradient(net, x, 1.0, Eigen::VectorXd(), 0.0, 1e-6);
                CHECK(oracles::vec_rel_err(a, fd) < 1e-6);
            }
            // gradient path
            {
                const Eigen::VectorXd a = analytic_param_gradient(net, x, 0.0, w_gamma, 0.0);
                const Eigen::VectorXd fd = fd_param_gradient(net, x, 0.0, w_gamma, 0.0, 1e-6);
                CHECK(oracles::vec_rel_err(a, fd) < 1e-5);
            }
            // laplacian path (not available for ReLU; ReQU sigma''' vanishes a.e.)
            {
                const Eigen::VectorXd a = analytic_param_gradient(net, x, 0.0, Eigen::VectorXd(),
                                                                  0.7);
                const Eigen::VectorXd fd =
                    fd_param_gradient(net, x, 0.0, Eigen::VectorXd(), 0.7, 1e-6);
                CHECK(oracles::vec_rel_err(a, fd) < 1e-5);
            }
            // mixed
            {
                const Eigen::VectorXd a = analytic_param_gradient(net, x, -0.3, w_gamma, 1.1);
                const Eigen::VectorXd fd = fd_param_gradient(net, x, -0.3, w_gamma, 1.1, 1e-6);
                CHECK(oracles::vec_rel_err(a, fd) < 1e-5);
            }
        }
    }
}

TEST_CASE("ESVM loss parameter gradient matches per-parameter finite differences") {
    const GaussianTarget target(3);
    SamplerConfig scfg;
    scfg.step_size = 0.1;
    scfg.n_burn = 100;
    scfg.n_train = 256;
    scfg.seed = 8;
    const Chain chain = generate_chain(target, scfg, ChainRole::Train, 0);
    SpectralVarianceEstimator est;
    est.truncation_point = 16;
    const TargetFunctional f = TargetFunctional::coordinate_square(2);

    for (Activation act : {Activation::ReCU, Activation::Tanh}) {
        const auto net = MultilayerPerceptron::random({3, 8, 1}, act, true, 17);
        const Eigen::VectorXd f_vals = f.evaluate_rows(chain.states);

        // Analytic: lambda = dV/dh, then per-point reverse mode.
        Eigen::MatrixXd grads;
        Eigen::VectorXd laps;
        net.derivative_rows(chain.states, grads, laps);
        Eigen::MatrixXd grad_u(chain.length(), 3);
        for (Eigen::Index k = 0; k < chain.length(); ++k) {
            grad_u.row(k) = chain.states.row(k);  // gaussian: grad U = x
        }
        const Eigen::VectorXd g = laps - grads.cwiseProduct(grad_u).rowwise().sum();
        const Eigen::VectorXd h = f_vals - g;
        std::vector<double> lambda;
        spectral_variance_gradient(
            std::span<const double>(h.data(), static_cast<std::size_t>(h.size())), est, lambda);
        Eigen::VectorXd analytic = Eigen::VectorXd::Zero(net.parameter_count());
        auto scratch = net.make_gradient_scratch();
        Eigen::VectorXd x(3), wg(3);
        for (Eigen::Index k = 0; k < chain.length(); ++k) {
            x = chain.states.row(k).transpose();
            wg = lambda[static_cast<std::size_t>(k)] * grad_u.row(k).transpose();
            net.accumulate_parameter_gradient(x, 0.0, wg, -lambda[static_cast<std::size_t>(k)],
                                              *scratch, analytic);
        }

        // Per-parameter finite differences of the loss.
        const Eigen::VectorXd theta0 = net.parameters();
        Eigen::VectorXd theta = theta0;
        Eigen::VectorXd fd(theta0.size());
        const double hp = 1e-5;
        for (Eigen::Index i = 0; i < theta0.size(); ++i) {
            MultilayerPerceptron m = net;
            theta[i] = theta0[i] + hp;
            m.set_parameters(theta);
            const double up = esvm_loss(chain, f, m, target, est);
            theta[i] = theta0[i] - hp;
            m.set_parameters(theta);
            const double dn = esvm_loss(chain, f, m, target, est);
            theta[i] = theta0[i];
            fd[i] = (up - dn) / (2.0 * hp);
        }
        CHECK(oracles::vec_rel_err(analytic, fd) < 1e-4);
    }
}

TEST_CASE("parallel gradient evaluation reproduces the serial parameters exactly") {
    const GaussianTarget target(2);
    SamplerConfig scfg;
    scfg.step_size = 0.1;
    scfg.n_burn = 100;
    scfg.n_train = 5000;  // several chunks
    scfg.seed = 4;
    const Chain chain = generate_chain(target, scfg, ChainRole::Train, 0);
    SpectralVarianceEstimator est;
    est.truncation_point = 10;
    const TargetFunctional f = TargetFunctional::coordinate_square(2);

    auto run = [&](bool parallel) {
        auto net = MultilayerPerceptron::random({2, 8, 1}, Activation::ReCU, true, 99);
        TrainOptions opts;
        opts.epochs = 3;
        opts.parallel = parallel;
        opts.adam.weight_decay = 0.0;
        train(chain, f, net, target, est, opts);
        return net.parameters();
    };
    const Eigen::VectorXd serial = run(false);
    const Eigen::VectorXd parallel = run(true);
    CHECK((serial - parallel).lpNorm<Eigen::Infinity>() == 0.0);
}

TEST_CASE("adam update rules") {
    AdamConfig cfg;
    cfg.learning_rate = 0.05;
    cfg.weight_decay = 0.0;

    SUBCASE("zero gradient leaves parameters unchanged") {
        AdamState adam(3, cfg);
        Eigen::VectorXd params(3);
        params << 1.0, -2.0, 0.5;
        const Eigen::VectorXd before = params;
        adam.step(params, Eigen::VectorXd::Zero(3));
        CHECK((params - before).lpNorm<Eigen::Infinity>() == 0.0);
    }
    SUBCASE("first step has magnitude ~ lr, signwise") {
        AdamState adam(2, cfg);
        Eigen::VectorXd params = Eigen::VectorXd::Zero(2);
        Eigen::VectorXd grads(2);
        grads << 3.0, -0.25;  // |g| >> eps
        adam.step(params, grads);
        CHECK(params[0] == doctest::Approx(-cfg.learning_rate).epsilon(1e-6));
        CHECK(params[1] == doctest::Approx(cfg.learning_rate).epsilon(1e-6));
    }
    SUBCASE("decoupled decay scales parameters before the update") {
        cfg.weight_decay = 0.1;
        AdamState adam(2, cfg);
        Eigen::VectorXd params(2);
        params << 2.0, -4.0;
        adam.step(params, Eigen::VectorXd::Zero(2));
        CHECK(params[0] == doctest::Approx(2.0 * (1.0 - 0.05 * 0.1)).epsilon(1e-15));
        CHECK(params[1] == doctest::Approx(-4.0 * (1.0 - 0.05 * 0.1)).epsilon(1e-15));
    }
    SUBCASE("shape mismatch") {
        AdamState adam(2, cfg);
        Eigen::VectorXd params(3);
        params.setZero();
        CHECK_THROWS_AS(adam.step(params, Eigen::VectorXd::Zero(3)), ConfigError);
    }
}
