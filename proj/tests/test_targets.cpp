#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "errors.hpp"
#include "oracles.hpp"
#include "rng.hpp"
#include "targets.hpp"

using namespace steincv;

namespace {

// Gradient-vs-finite-difference sweep over random points in [-3,3]^d.
void check_gradient(const Target& target, int n_points = 100) {
    Rng rng(42);
    const int d = target.dim();
    auto f = [&](const Eigen::VectorXd& x) { return target.potential(x); };
    for (int rep = 0; rep < n_points; ++rep) {
        Eigen::VectorXd x(d);
        for (int j = 0; j < d; ++j) x[j] = rng.uniform(-3.0, 3.0);
        const Eigen::VectorXd analytic = target.grad_potential(x);
        const Eigen::VectorXd fd = oracles::central_diff_gradient(f, x, 1e-5);
        CHECK(oracles::vec_rel_err(analytic, fd) < 1e-6);
    }
}

std::filesystem::path write_temp_csv(const std::string& name, const std::string& content) {
    const auto path = std::filesystem::temp_directory_path() / name;
    std::ofstream out(path);
    out << content;
    return path;
}

}  // namespace

TEST_CASE("gaussian potential") {
    GaussianTarget target(2);
    Eigen::VectorXd x(2);
    x << 0, 0;
    CHECK(target.potential(x) == 0.0);
    x << 3, 4;
    CHECK(target.potential(x) == 12.5);
    CHECK(target.grad_potential(x) == x);
    check_gradient(target);
}

TEST_CASE("funnel potential") {
    FunnelTarget target(2, 1.0, 0.5);
    Eigen::VectorXd x(2);
    x << 0, 0;
    CHECK(target.potential(x) == 0.0);
    x << 1, 0;
    // 0.5 + (d-1) b x1 + exp(-1) * 0 = 0.5 + 0.5
    CHECK(target.potential(x) == doctest::Approx(1.0).epsilon(1e-15));
    check_gradient(target);

    Eigen::VectorXd wrong(3);
    wrong.setZero();
    CHECK_THROWS_AS(target.potential(wrong), ConfigError);

    SUBCASE("d=10 gradient") {
        FunnelTarget big(10, 1.0, 0.5);
        check_gradient(big, 25);
    }
}

TEST_CASE("banana potential") {
    BananaTarget target(6, 20.0, 0.05);
    Eigen::VectorXd x = Eigen::VectorXd::Zero(6);
    // (x2 + b x1^2 - p b)^2 / 2 = (-1)^2 / 2 at the origin.
    CHECK(target.potential(x) == doctest::Approx(0.5).epsilon(1e-15));
    x[1] = 1.0;
    CHECK(target.potential(x) == 0.0);
    check_gradient(target);

    Eigen::VectorXd wrong(2);
    wrong.setZero();
    CHECK_THROWS_AS(target.potential(wrong), ConfigError);
}

TEST_CASE("banana tail coordinates are exactly gaussian") {
    BananaTarget target(6, 20.0, 0.05);
    Rng rng(3);
    for (int rep = 0; rep < 50; ++rep) {
        Eigen::VectorXd x(6);
        for (int j = 0; j < 6; ++j) x[j] = rng.uniform(-3.0, 3.0);
        const double u0 = target.potential(x);
        Eigen::VectorXd y = x;
        const double delta = rng.uniform(-2.0, 2.0);
        const int k = 2 + static_cast<int>(rng.next_u64() % 4);
        y[k] = x[k] + delta;
        const double expected = 0.5 * y[k] * y[k] - 0.5 * x[k] * x[k];
        CHECK(target.potential(y) - u0 == doctest::Approx(expected).epsilon(1e-12));
    }
}

TEST_CASE("logreg potential hand value") {
    // One observation, whitened design (1), label 1, g = 100, x = 0:
    // U = -(0 - ln 2) + 0 = ln 2.
    LogRegData data;
    data.whitened.resize(1, 1);
    data.whitened << 1.0;
    data.labels.resize(1);
    data.labels << 1.0;
    data.train_design = data.whitened;
    data.train_labels = data.labels;
    data.test_design = data.whitened;
    data.test_labels = data.labels;
    data.prior_scale = 100.0;
    LogRegTarget target(data);
    Eigen::VectorXd x(1);
    x << 0.0;
    CHECK(target.potential(x) == doctest::Approx(std::log(2.0)).epsilon(1e-12));

    // Prior term alone vanishes at zero regardless of the data.
    x << 2.0;
    const double margin = 2.0;
    const double expected = -(margin - log1p_exp(margin)) + 4.0 / 200.0;
    CHECK(target.potential(x) == doctest::Approx(expected).epsilon(1e-12));
    check_gradient(target);
}

TEST_CASE("whitening makes the gram matrix the identity") {
    Rng rng(9);
    Eigen::MatrixXd design(40, 5);
    for (Eigen::Index i = 0; i < design.size(); ++i) design(i) = rng.normal();
    const Eigen::MatrixXd whitened = whiten_design(design);
    const Eigen::MatrixXd gram = whitened.transpose() * whitened;
    CHECK((gram - Eigen::MatrixXd::Identity(5, 5)).cwiseAbs().maxCoeff() < 1e-8);

    SUBCASE("idempotent in effect") {
        const Eigen::MatrixXd again = whiten_design(whitened);
        CHECK((again - whitened).cwiseAbs().maxCoeff() < 1e-8);
    }
}

TEST_CASE("csv loader: small synthetic file") {
    const auto path = write_temp_csv("steincv_tiny.csv", "0.5,1\n-1.25,0\n2.0,1\n0.1,0\n1.3,1\n");
    const LogRegData data = load_logreg_csv(path.string(), 100.0, 7);
    CHECK(data.whitened.rows() == 5);
    CHECK(data.dim() == 2);  // one feature + intercept
    CHECK(data.train_design.rows() == 4);
    CHECK(data.test_design.rows() == 1);
    const Eigen::MatrixXd gram = data.whitened.transpose() * data.whitened;
    CHECK((gram - Eigen::MatrixXd::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-8);
    std::filesystem::remove(path);
}

TEST_CASE("csv loader: two-row file whitens to the identity gram") {
    const auto path = write_temp_csv("steincv_tworow.csv", "1.0,1\n-2.0,0\n");
    const LogRegData data = load_logreg_csv(path.string(), 100.0, 7);
    CHECK(data.dim() == 2);
    const Eigen::MatrixXd gram = data.whitened.transpose() * data.whitened;
    CHECK((gram - Eigen::MatrixXd::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-8);
    std::filesystem::remove(path);
}

TEST_CASE("csv loader: header auto-detection") {
    const auto path =
        write_temp_csv("steincv_header.csv", "feature,outcome\n0.5,1\n-1.25,0\n1.0,1\n0.2,0\n2,1\n");
    const LogRegData data = load_logreg_csv(path.string(), 100.0, 7);
    CHECK(data.whitened.rows() == 5);
    std::filesystem::remove(path);
}

TEST_CASE("csv loader error paths") {
    SUBCASE("missing file") {
        CHECK_THROWS_AS(load_logreg_csv("/nonexistent/steincv.csv", 100.0, 7), IngestionError);
    }
    SUBCASE("malformed row names its index") {
        const auto path = write_temp_csv("steincv_bad.csv", "0.5,1\nnot-a-number,0\n1.0,1\n");
        try {
            load_logreg_csv(path.string(), 100.0, 7);
            FAIL("expected IngestionError");
        } catch (const IngestionError& e) {
            CHECK(std::string(e.what()).find("row 2") != std::string::npos);
        }
        std::filesystem::remove(path);
    }
    SUBCASE("non-binary outcome") {
        const auto path = write_temp_csv("steincv_label.csv", "0.5,1\n1.0,2\n");
        CHECK_THROWS_AS(load_logreg_csv(path.string(), 100.0, 7), IngestionError);
        std::filesystem::remove(path);
    }
    SUBCASE("ragged row") {
        const auto path = write_temp_csv("steincv_ragged.csv", "0.5,1.5,1\n1.0,1\n");
        CHECK_THROWS_AS(load_logreg_csv(path.string(), 100.0, 7), IngestionError);
        std::filesystem::remove(path);
    }
}

TEST_CASE("pima-shaped synthetic dataset: 768 rows, 8 features, 614/154 split") {
    // Deterministic logistic model data of the Pima shape.
    Rng rng(99);
    std::string csv;
    for (int i = 0; i < 768; ++i) {
        double margin = -0.3;
        for (int j = 0; j < 8; ++j) {
            const double z = rng.uniform(-2.0, 2.0);
            margin += z * (j % 2 == 0 ? 0.4 : -0.25);
            csv += std::to_string(z) + ",";
        }
        const int y = rng.uniform() < 1.0 / (1.0 + std::exp(-margin)) ? 1 : 0;
        csv += std::to_string(y) + "\n";
    }
    const auto path = write_temp_csv("steincv_pima_shape.csv", csv);
    const LogRegData data = load_pima(path.string(), 100.0, 2024);
    CHECK(data.whitened.rows() == 768);
    CHECK(data.dim() == 9);
    CHECK(data.train_design.rows() == 614);
    CHECK(data.test_design.rows() == 154);
    const Eigen::MatrixXd gram = data.whitened.transpose() * data.whitened;
    CHECK((gram - Eigen::MatrixXd::Identity(9, 9)).cwiseAbs().maxCoeff() < 1e-8);

    SUBCASE("split is deterministic in the seed") {
        const LogRegData again = load_pima(path.string(), 100.0, 2024);
        CHECK((again.train_design - data.train_design).cwiseAbs().maxCoeff() == 0.0);
        const LogRegData other = load_pima(path.string(), 100.0, 2025);
        CHECK((other.train_design - data.train_design).cwiseAbs().maxCoeff() > 0.0);
    }
    std::filesystem::remove(path);
}
