#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "config.hpp"
#include "errors.hpp"
#include "esvm.hpp"
#include "experiment.hpp"
#include "fsutil.hpp"
#include "mlp.hpp"
#include "polynomial.hpp"
#include "specvar.hpp"
#include "stein.hpp"

using namespace steincv;

namespace {

Chain gaussian_chain(int dim, std::int64_t n, std::uint64_t seed, ChainRole role = ChainRole::Train,
                     std::uint64_t index = 0) {
    const GaussianTarget target(dim);
    SamplerConfig cfg;
    cfg.step_size = 0.1;
    cfg.n_burn = 500;
    cfg.n_train = n;
    cfg.n_test = n;
    cfg.seed = seed;
    return generate_chain(target, cfg, role, index);
}

}  // namespace

TEST_CASE("functional evaluation") {
    Eigen::VectorXd x(3);
    x << 1.0, -2.0, 0.5;
    CHECK(TargetFunctional::coordinate_square(2)(x) == 4.0);
    CHECK(TargetFunctional::coordinate(3)(x) == 0.5);
    CHECK_THROWS_AS(TargetFunctional::coordinate_square(4)(x), ConfigError);
    CHECK_THROWS_AS(TargetFunctional::coordinate(0), ConfigError);
}

TEST_CASE("esvm loss identities") {
    const GaussianTarget target(2);
    const Chain chain = gaussian_chain(2, 2000, 3);
    SpectralVarianceEstimator est;
    est.truncation_point = 10;

    SUBCASE("optimal phi zeroes the loss") {
        const TargetFunctional f = TargetFunctional::coordinate(1);
        const LinearPhi phi = optimal_phi_gaussian_linear(2);
        CHECK(esvm_loss(chain, f, phi, target, est) < 1e-20);
    }
    SUBCASE("constant phi reproduces V_n(f)") {
        const TargetFunctional f = TargetFunctional::coordinate_square(2);
        LinearPhi phi(Eigen::VectorXd::Zero(2), 7.0);
        const Eigen::VectorXd f_vals = f.evaluate_rows(chain.states);
        const double plain = spectral_variance(
            std::span<const double>(f_vals.data(), static_cast<std::size_t>(f_vals.size())), est);
        CHECK(esvm_loss(chain, f, phi, target, est) == plain);
    }
    SUBCASE("loss is invariant to constant shifts of f") {
        // f and f + c give the same V_n series variance.
        const TargetFunctional f = TargetFunctional::coordinate_square(2);
        LinearPhi phi(Eigen::VectorXd::Zero(2));
        const Eigen::VectorXd f_vals = f.evaluate_rows(chain.states);
        Eigen::VectorXd shifted = f_vals.array() + 123.0;
        const double a = spectral_variance(
            std::span<const double>(f_vals.data(), static_cast<std::size_t>(f_vals.size())), est);
        const double b = spectral_variance(
            std::span<const double>(shifted.data(), static_cast<std::size_t>(shifted.size())),
            est);
        CHECK(std::abs(a - b) < 1e-10);
    }
}

TEST_CASE("train contract") {
    const GaussianTarget target(2);
    const Chain chain = gaussian_chain(2, 3000, 9);
    SpectralVarianceEstimator est;
    est.truncation_point = 10;
    const TargetFunctional f = TargetFunctional::coordinate(1);

    SUBCASE("zero epochs returns the model unchanged") {
        auto net = MultilayerPerceptron::random({2, 8, 1}, Activation::ReCU, true, 4);
        const Eigen::VectorXd before = net.parameters();
        TrainOptions opts;
        opts.epochs = 0;
        const TrainResult result = train(chain, f, net, target, est, opts);
        CHECK((net.parameters() - before).lpNorm<Eigen::Infinity>() == 0.0);
        CHECK(result.loss_trace.empty());
        CHECK(result.initial_loss == result.best_loss);
    }
    SUBCASE("best snapshot never exceeds the initial loss") {
        auto net = MultilayerPerceptron::random({2, 8, 1}, Activation::ReCU, true, 4);
        TrainOptions opts;
        opts.epochs = 120;
        opts.adam.learning_rate = 5e-3;
        const TrainResult result = train(chain, f, net, target, est, opts);
        CHECK_FALSE(result.aborted);
        CHECK(result.best_loss <= result.initial_loss);
        CHECK(result.best_loss < result.initial_loss);  // smoke: training improves
        CHECK(result.loss_trace.size() == 120);
        // The model holds the best snapshot.
        CHECK(esvm_loss(chain, f, net, target, est) ==
              doctest::Approx(result.best_loss).epsilon(1e-12));
    }
    SUBCASE("divergent optimization aborts with a diagnostic and keeps a snapshot") {
        auto net = MultilayerPerceptron::random({2, 8, 1}, Activation::ReCU, true, 4);
        TrainOptions opts;
        opts.epochs = 200;
        opts.adam.learning_rate = 1e6;  // forces overflow of the cubic units
        const TrainResult result = train(chain, f, net, target, est, opts);
        CHECK(result.aborted);
        CHECK_FALSE(result.diagnostic.empty());
        CHECK(std::isfinite(esvm_loss(chain, f, net, target, est)));
    }
    SUBCASE("minibatch window validation and smoke run") {
        auto net = MultilayerPerceptron::random({2, 8, 1}, Activation::ReCU, true, 4);
        TrainOptions opts;
        opts.epochs = 30;
        opts.minibatch_window = 10;  // < 4 b_n
        CHECK_THROWS_AS(train(chain, f, net, target, est, opts), ConfigError);
        opts.minibatch_window = 512;
        const TrainResult result = train(chain, f, net, target, est, opts);
        CHECK(result.loss_trace.size() == 30);
        CHECK_FALSE(result.aborted);
    }
}

TEST_CASE("evaluate: constant and optimal control variates") {
    const GaussianTarget target(2);
    SamplerConfig cfg;
    cfg.step_size = 0.1;
    cfg.n_burn = 500;
    cfg.n_test = 4000;
    cfg.n_test_chains = 6;
    cfg.seed = 21;
    const std::vector<Chain> chains = generate_test_chains(target, cfg);
    SpectralVarianceEstimator est;
    est.truncation_point = 10;

    SUBCASE("constant phi: ESVRR is exactly 1 on every chain") {
        const TargetFunctional f = TargetFunctional::coordinate_square(2);
        LinearPhi phi(Eigen::VectorXd::Zero(2), -3.0);
        const EsvmReport report = evaluate(chains, f, phi, target, est);
        REQUIRE(report.per_chain.size() == 6);
        for (const auto& ev : report.per_chain) {
            CHECK(ev.ratio == 1.0);
            CHECK(ev.v_f == ev.v_fg);
            CHECK(ev.pi_f == ev.pi_fg);
        }
        CHECK(report.esvrr_median == 1.0);
        CHECK_FALSE(report.has_infinite_ratio);
    }
    SUBCASE("optimal phi: residual variance vanishes, ratio flagged infinite") {
        const TargetFunctional f = TargetFunctional::coordinate(1);
        const LinearPhi phi = optimal_phi_gaussian_linear(2);
        const EsvmReport report = evaluate(chains, f, phi, target, est);
        for (const auto& ev : report.per_chain) {
            CHECK(ev.v_fg < 1e-20);
            CHECK(ev.pi_fg == 0.0);  // h is identically zero
        }
        CHECK(report.has_infinite_ratio);
        CHECK(report.median_infinite);
    }
}

TEST_CASE("boxplot quartiles") {
    const BoxplotStats s = boxplot_stats({5.0, 1.0, 3.0, 2.0, 4.0});
    CHECK(s.min == 1.0);
    CHECK(s.q1 == 2.0);
    CHECK(s.median == 3.0);
    CHECK(s.q3 == 4.0);
    CHECK(s.max == 5.0);
    const BoxplotStats t = boxplot_stats({1.0, 2.0});
    CHECK(t.median == 1.5);
    CHECK_THROWS_AS(boxplot_stats({}), ConfigError);
}

TEST_CASE("plain and cv estimators agree on the estimand") {
    // Trained net on the gaussian: the two pi_N medians must coincide within
    // CI resolution.
    const GaussianTarget target(2);
    SamplerConfig cfg;
    cfg.step_size = 0.1;
    cfg.n_burn = 500;
    cfg.n_train = 4000;
    cfg.n_test = 4000;
    cfg.n_test_chains = 30;
    cfg.seed = 33;
    SpectralVarianceEstimator est;
    est.truncation_point = 15;
    const TargetFunctional f = TargetFunctional::coordinate_square(2);
    const Chain train_chain = generate_chain(target, cfg, ChainRole::Train, 0);

    auto net = MultilayerPerceptron::random({2, 16, 1}, Activation::ReCU, true, 5);
    TrainOptions opts;
    opts.epochs = 150;
    opts.adam.learning_rate = 5e-3;
    opts.seed = cfg.seed;
    train(train_chain, f, net, target, est, opts);

    const std::vector<Chain> chains = generate_test_chains(target, cfg);
    const EsvmReport report = evaluate(chains, f, net, target, est);

    std::vector<double> v_f, v_fg;
    for (const auto& ev : report.per_chain) {
        v_f.push_back(ev.v_f);
        v_fg.push_back(ev.v_fg);
    }
    const double hw_f =
        confidence_interval(0.0, boxplot_stats(v_f).median, 4000, 0.05).second;
    const double hw_fg =
        confidence_interval(0.0, boxplot_stats(v_fg).median, 4000, 0.05).second;
    CHECK(std::abs(report.plain.median - report.cv.median) < 3.0 * std::max(hw_f, hw_fg));
}

TEST_CASE("run_experiment emits deterministic reports and artifacts") {
    const auto out_dir = std::filesystem::temp_directory_path() / "steincv_exp";
    std::filesystem::remove_all(out_dir);

    ExperimentConfig cfg;
    cfg.target_name = "gaussian";
    cfg.dim = 2;
    cfg.sampler.step_size = 0.1;
    cfg.sampler.n_burn = 200;
    cfg.sampler.n_train = 1500;
    cfg.sampler.n_test = 1500;
    cfg.sampler.n_test_chains = 4;
    cfg.sampler.seed = 11;
    cfg.b_n = 10;
    cfg.model_family = "mlp";
    cfg.widths = {8};
    cfg.epochs = 40;
    cfg.functional_kind = "coordinate_square";
    cfg.coordinate = 2;
    cfg.output_dir = out_dir.string();

    const ExperimentResult first = run_experiment(cfg, "");
    CHECK(std::filesystem::exists(out_dir / "report.json"));
    CHECK(std::filesystem::exists(out_dir / "boxplot.csv"));
    CHECK(std::filesystem::exists(out_dir / "loss.csv"));
    CHECK(std::filesystem::exists(out_dir / "boxplot.gp"));
    CHECK(read_file(out_dir / "report.json") == first.report_json);

    const ExperimentResult second = run_experiment(cfg, "");
    CHECK(first.report_json == second.report_json);

    SUBCASE("zero control variate on a polynomial of degree 0 gives ESVRR 1") {
        ExperimentConfig poly = cfg;
        poly.model_family = "polynomial";
        poly.degree = 0;
        poly.poly_fit = "exact";
        poly.output_dir = (out_dir / "poly").string();
        const ExperimentResult result = run_experiment(poly, "");
        CHECK(result.report.esvrr_median == 1.0);
    }
    std::filesystem::remove_all(out_dir);
}

TEST_CASE("pregenerated chains reproduce the in-process run") {
    const auto dir = std::filesystem::temp_directory_path() / "steincv_pregen";
    std::filesystem::create_directories(dir);

    ExperimentConfig cfg;
    cfg.target_name = "gaussian";
    cfg.dim = 2;
    cfg.sampler.step_size = 0.1;
    cfg.sampler.n_burn = 100;
    cfg.sampler.n_train = 1000;
    cfg.sampler.n_test = 1000;
    cfg.sampler.n_test_chains = 2;
    cfg.sampler.seed = 17;
    cfg.b_n = 8;
    cfg.model_family = "polynomial";
    cfg.degree = 2;
    cfg.poly_fit = "exact";
    cfg.output_dir = (dir / "a").string();

    const ExperimentResult in_process = run_experiment(cfg, "");

    const auto chain_path = (dir / "train.stcv").string();
    sample_to_file(cfg, "", chain_path);
    ExperimentConfig pre = cfg;
    pre.pregenerated_chain_path = chain_path;
    pre.output_dir = (dir / "b").string();
    const ExperimentResult from_file = run_experiment(pre, "");

    // Identical evaluation numbers; the config echo differs by design.
    CHECK(from_file.report.esvrr_median == in_process.report.esvrr_median);
    CHECK(from_file.report.training.best_loss == in_process.report.training.best_loss);
    for (std::size_t i = 0; i < in_process.report.per_chain.size(); ++i) {
        CHECK(from_file.report.per_chain[i].v_fg == in_process.report.per_chain[i].v_fg);
        CHECK(from_file.report.per_chain[i].pi_fg == in_process.report.per_chain[i].pi_fg);
    }
    std::filesystem::remove_all(dir);
}

TEST_CASE("funnel runs carry the sampler deviation note") {
    ExperimentConfig cfg;
    cfg.target_name = "funnel";
    cfg.dim = 2;
    cfg.funnel_a = 1.0;
    cfg.funnel_b = 0.5;
    cfg.sampler.step_size = 0.1;
    cfg.sampler.n_burn = 100;
    cfg.sampler.n_train = 800;
    cfg.sampler.n_test = 800;
    cfg.sampler.n_test_chains = 2;
    cfg.sampler.seed = 2;
    cfg.b_n = 8;
    cfg.model_family = "polynomial";
    cfg.degree = 1;
    cfg.poly_fit = "exact";
    const auto dir = std::filesystem::temp_directory_path() / "steincv_funnel_note";
    cfg.output_dir = dir.string();
    const ExperimentResult result = run_experiment(cfg, "");
    REQUIRE(result.report.deviations.size() == 1);
    CHECK(result.report.deviations[0].find("NUTS") != std::string::npos);
    CHECK(result.report_json.find("NUTS") != std::string::npos);
    std::filesystem::remove_all(dir);
}
