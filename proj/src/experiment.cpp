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
#include "experiment.hpp"

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <sstream>

#include "errors.hpp"
#include "fsutil.hpp"
#include "mlp.hpp"
#include "polynomial.hpp"
#include "rng.hpp"
#include "stein.hpp"

namespace steincv {

namespace {

using nlohmann::json;

std::string format_double(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

json finite_or_null(double v) {
    if (std::isfinite(v)) return v;
    return nullptr;
}

}  // namespace

std::string resolve_dataset_path(const ExperimentConfig& cfg, const std::string& data_dir) {
    std::filesystem::path file(cfg.dataset_file);
    if (file.is_absolute()) return file.string();
    std::string dir = data_dir;
    if (dir.empty()) {
        if (const char* env = std::getenv("STEINCV_DATA_DIR")) dir = env;
    }
    if (dir.empty()) return file.string();
    return (std::filesystem::path(dir) / file).string();
}

std::unique_ptr<Target> make_target(const ExperimentConfig& cfg, const std::string& data_dir) {
    if (cfg.target_name == "gaussian") return std::make_unique<GaussianTarget>(cfg.dim);
    if (cfg.target_name == "funnel") {
        return std::make_unique<FunnelTarget>(cfg.dim, cfg.funnel_a, cfg.funnel_b);
    }
    if (cfg.target_name == "banana") {
        return std::make_unique<BananaTarget>(cfg.dim, cfg.banana_p, cfg.banana_b);
    }
    if (cfg.target_name == "logreg") {
        LogRegData data =
            load_logreg_csv(resolve_dataset_path(cfg, data_dir), cfg.logreg_g, cfg.sampler.seed);
        if (data.dim() != cfg.dim) {
            throw ConfigError("dataset dimension " + std::to_string(data.dim()) +
                              " (features + intercept) does not match target.dim " +
                              std::to_string(cfg.dim));
        }
        return std::make_unique<LogRegTarget>(std::move(data));
    }
    throw ConfigError("unknown target '" + cfg.target_name + "'");
}

std::unique_ptr<Target> make_target_from_json(const nlohmann::json& spec,
                                              const std::string& data_dir) {
    ExperimentConfig cfg;
    if (!spec.contains("name") || !spec.at("name").is_string()) {
        throw ConfigError("target spec needs a string 'name'");
    }
    cfg.target_name = spec.at("name").get<std::string>();
    cfg.dim = spec.value("dim", cfg.dim);
    cfg.sampler.seed = spec.value("seed", std::uint64_t{0});
    const nlohmann::json params = spec.value("params", nlohmann::json::object());
    try {
        if (cfg.target_name == "funnel") {
            cfg.funnel_a = params.value("a", cfg.funnel_a);
            cfg.funnel_b = params.value("b", cfg.funnel_b);
        } else if (cfg.target_name == "banana") {
            cfg.banana_p = params.value("p", cfg.banana_p);
            cfg.banana_b = params.value("b", cfg.banana_b);
        } else if (cfg.target_name == "logreg") {
            cfg.logreg_g = params.value("g", cfg.logreg_g);
            cfg.dataset_file = params.value("dataset", cfg.dataset_file);
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("target spec field error: ") + e.what());
    }
    return make_target(cfg, data_dir);
}

namespace {

TargetFunctional make_functional(const ExperimentConfig& cfg, const Target& target) {
    if (cfg.functional_kind == "coordinate_square") {
        return TargetFunctional::coordinate_square(cfg.coordinate);
    }
    if (cfg.functional_kind == "coordinate") {
        return TargetFunctional::coordinate(cfg.coordinate);
    }
    const auto* logreg = dynamic_cast<const LogRegTarget*>(&target);
    if (logreg == nullptr) {
        throw ConfigError("functional average_test_likelihood requires the logreg target");
    }
    return TargetFunctional::average_test_likelihood(
        std::make_shared<const LogRegData>(logreg->data()));
}

Chain obtain_training_chain(const ExperimentConfig& cfg, const Target& target) {
    if (!cfg.pregenerated_chain_path.empty()) {
        Chain chain = load_chain(cfg.pregenerated_chain_path);
        if (chain.dim() != target.dim()) {
            throw ConfigError("pregenerated chain dimension does not match target");
        }
        if (chain.length() < static_cast<Eigen::Index>(cfg.b_n)) {
            throw ConfigError("pregenerated chain is shorter than estimator.b_n");
        }
        chain.target_name = target.name();
        return chain;
    }
    return generate_chain(target, cfg.sampler, ChainRole::Train, 0);
}

json boxplot_to_json(const BoxplotStats& s) {
    json j;
    j["min"] = s.min;
    j["q1"] = s.q1;
    j["median"] = s.median;
    j["q3"] = s.q3;
    j["max"] = s.max;
    return j;
}

std::string build_report_json(const ExperimentConfig& cfg, const EsvmReport& report) {
    json j;
    j["config"] = config_to_json(cfg);
    j["deviations"] = report.deviations;
    if (!cfg.metadata.empty()) j["metadata"] = cfg.metadata;

    json training;
    training["initial_loss"] = finite_or_null(report.training.initial_loss);
    training["best_loss"] = finite_or_null(report.training.best_loss);
    training["best_epoch"] = report.training.best_epoch;
    training["epochs_run"] = report.training.loss_trace.size();
    training["aborted"] = report.training.aborted;
    if (!report.training.diagnostic.empty()) training["diagnostic"] = report.training.diagnostic;
    j["training"] = training;

    json chains = json::array();
    for (const ChainEvaluation& ev : report.per_chain) {
        json c;
        c["chain_index"] = ev.chain_index;
        c["V_f"] = ev.v_f;
        c["V_fg"] = ev.v_fg;
        c["pi_f"] = ev.pi_f;
        c["pi_fg"] = ev.pi_fg;
        c["esvrr"] = ev.ratio_infinite ? json(nullptr) : json(ev.ratio);
        c["esvrr_infinite"] = ev.ratio_infinite;
        chains.push_back(c);
    }
    json evaluation;
    evaluation["per_chain"] = chains;
    evaluation["esvrr_median"] =
        report.median_infinite ? json(nullptr) : json(report.esvrr_median);
    evaluation["esvrr_mean"] = report.mean_infinite ? json(nullptr) : json(report.esvrr_mean);
    evaluation["esvrr_pooled"] = finite_or_null(report.esvrr_pooled);
    evaluation["has_infinite_ratio"] = report.has_infinite_ratio;
    evaluation["boxplot_plain"] = boxplot_to_json(report.plain);
    evaluation["boxplot_cv"] = boxplot_to_json(report.cv);
    j["evaluation"] = evaluation;
    return j.dump(2) + "\n";
}

std::string build_boxplot_csv(const EsvmReport& report) {
    std::string csv = "chain_index,estimator,pi_N,V_n\n";
    for (const ChainEvaluation& ev : report.per_chain) {
        csv += std::to_string(ev.chain_index) + ",plain," + format_double(ev.pi_f) + "," +
               format_double(ev.v_f) + "\n";
    }
    for (const ChainEvaluation& ev : report.per_chain) {
        csv += std::to_string(ev.chain_index) + ",cv," + format_double(ev.pi_fg) + "," +
               format_double(ev.v_fg) + "\n";
    }
    return csv;
}

std::string build_loss_csv(const TrainResult& result) {
    std::string csv = "epoch,loss\n";
    for (std::size_t e = 0; e < result.loss_trace.size(); ++e) {
        csv += std::to_string(e) + "," + format_double(result.loss_trace[e]) + "\n";
    }
    return csv;
}

std::string build_gnuplot_script() {
    return "# Boxplots of pi_N across test chains: plain average vs control variate.\n"
           "# Usage: gnuplot boxplot.gp   (expects boxplot.csv alongside)\n"
           "set datafile separator ','\n"
           "set style data boxplot\n"
           "set style boxplot outliers pointtype 7\n"
           "set style fill solid 0.4\n"
           "set xtics ('plain' 1, 'cv' 2)\n"
           "set ylabel 'pi_N estimate'\n"
           "plot 'boxplot.csv' skip 1 using (1):(strcol(2) eq 'plain' ? $3 : 1/0) notitle, \\\n"
           "     'boxplot.csv' skip 1 using (2):(strcol(2) eq 'cv' ? $3 : 1/0) notitle\n";
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& cfg, const std::string& data_dir) {
    cfg.validate();
    const std::unique_ptr<Target> target = make_target(cfg, data_dir);
    const TargetFunctional f = make_functional(cfg, *target);

    SpectralVarianceEstimator est;
    est.window = LagWindow::from_name(cfg.window);
    est.truncation_point = cfg.b_n;

    const Chain train_chain = obtain_training_chain(cfg, *target);

    EsvmReport report;
    std::unique_ptr<PhiFunction> fitted;
    if (cfg.model_family == "mlp") {
        std::vector<int> arch;
        arch.push_back(target->dim());
        for (int w : cfg.widths) arch.push_back(w);
        arch.push_back(1);
        auto net = std::make_unique<MultilayerPerceptron>(MultilayerPerceptron::random(
            arch, activation_from_name(cfg.activation), cfg.bias, cfg.sampler.seed));
        TrainOptions opts;
        opts.adam = cfg.adam;
        opts.epochs = cfg.epochs;
        opts.minibatch_window = cfg.minibatch_window;
        opts.parallel = cfg.parallel_gradients;
        opts.seed = cfg.sampler.seed;
        report.training = train(train_chain, f, *net, *target, est, opts);
        fitted = std::move(net);
    } else if (cfg.poly_fit == "exact") {
        const Eigen::VectorXd f_vals = f.evaluate_rows(train_chain.states);
        PolynomialPhi zero(target->dim(), cfg.degree);
        report.training.initial_loss = esvm_loss(train_chain, f, zero, *target, est);
        auto poly = std::make_unique<PolynomialPhi>(
            fit_polynomial_exact(train_chain.states, f_vals, *target, est, cfg.degree));
        report.training.best_loss = esvm_loss(train_chain, f, *poly, *target, est);
        report.training.best_epoch = 0;
        fitted = std::move(poly);
    } else {
        auto poly = std::make_unique<PolynomialPhi>(target->dim(), cfg.degree);
        TrainOptions opts;
        opts.adam = cfg.adam;
        opts.epochs = cfg.epochs;
        opts.minibatch_window = cfg.minibatch_window;
        opts.parallel = cfg.parallel_gradients;
        opts.seed = cfg.sampler.seed;
        report.training = train(train_chain, f, *poly, *target, est, opts);
        fitted = std::move(poly);
    }

    const std::vector<Chain> test_chains = generate_test_chains(*target, cfg.sampler);
    TrainResult training = std::move(report.training);
    report = evaluate(test_chains, f, *fitted, *target, est);
    report.training = std::move(training);
    if (cfg.target_name == "funnel") {
        report.deviations.push_back(
            "sampler: ULA used for the funnel target (the reference experiment used NUTS)");
    }

    ExperimentResult result;
    result.report_json = build_report_json(cfg, report);
    result.report = std::move(report);

    const std::filesystem::path out_dir(cfg.output_dir);
    std::filesystem::create_directories(out_dir);
    atomic_write_file(out_dir / "report.json", result.report_json);
    atomic_write_file(out_dir / "boxplot.csv", build_boxplot_csv(result.report));
    atomic_write_file(out_dir / "loss.csv", build_loss_csv(result.report.training));
    atomic_write_file(out_dir / "boxplot.gp", build_gnuplot_script());
    return result;
}

void sample_to_file(const ExperimentConfig& cfg, const std::string& data_dir,
                    const std::string& out_path) {
    cfg.validate();
    const std::unique_ptr<Target> target = make_target(cfg, data_dir);
    const Chain chain = generate_chain(*target, cfg.sampler, ChainRole::Train, 0);
    save_chain(chain, out_path);
}

GradCheckResult gradient_check(const std::string& activation, int dim,
                               const std::vector<int>& widths, std::uint64_t seed,
                               bool check_laplacian) {
    const Activation act = activation_from_name(activation);
    if (check_laplacian && !activation_supports_laplacian(act)) {
        throw UnsupportedError("activation '" + activation + "' has no Laplacian (not C^2)");
    }
    if (dim < 1) throw ConfigError("gradcheck dim must be positive");
    std::vector<int> arch;
    arch.push_back(dim);
    for (int w : widths) arch.push_back(w);
    arch.push_back(1);
    const MultilayerPerceptron net = MultilayerPerceptron::random(arch, act, true, seed);

    GradCheckResult result;
    Rng rng(seed, kStreamTest, 0x67c);
    const double h = 1e-4;
    const int n_points = 20;
    int checked = 0;
    int attempts = 0;
    while (checked < n_points && attempts < n_points * 50) {
        ++attempts;
        Eigen::VectorXd x(dim);
        for (int j = 0; j < dim; ++j) x[j] = rng.uniform(-2.0, 2.0);
        // Finite differences need the activation kinks at a safe distance.
        if (net.min_kink_distance(x) < 5e-3) continue;
        ++checked;

        const Eigen::VectorXd analytic = net.input_gradient(x);
        Eigen::VectorXd fd(dim);
        Eigen::VectorXd xp = x;
        for (int j = 0; j < dim; ++j) {
            xp[j] = x[j] + h;
            const double up = net.forward(xp);
            xp[j] = x[j] - h;
            const double dn = net.forward(xp);
            xp[j] = x[j];
            fd[j] = (up - dn) / (2.0 * h);
        }
        const double scale = std::max(1.0, fd.lpNorm<Eigen::Infinity>());
        result.max_gradient_rel_err = std::max(result.max_gradient_rel_err,
                                               (analytic - fd).lpNorm<Eigen::Infinity>() / scale);

        if (check_laplacian) {
            const double lap = net.input_laplacian(x);
            const double f0 = net.forward(x);
            double fd_lap = 0.0;
            for (int j = 0; j < dim; ++j) {
                xp[j] = x[j] + h;
                const double up = net.forward(xp);
                xp[j] = x[j] - h;
                const double dn = net.forward(xp);
                xp[j] = x[j];
                fd_lap += (up - 2.0 * f0 + dn) / (h * h);
            }
            const double lscale = std::max(1.0, std::abs(fd_lap));
            result.max_laplacian_rel_err =
                std::max(result.max_laplacian_rel_err, std::abs(lap - fd_lap) / lscale);
            result.laplacian_checked = true;
        }
    }
    if (checked < n_points) {
        throw NumericError("could not find enough points away from activation kinks");
    }

    // Parameter gradient of the ESVM loss on a short Gaussian-target chain.
    {
        const GaussianTarget target(dim);
        SamplerConfig scfg;
        scfg.step_size = 0.1;
        scfg.n_burn = 100;
        scfg.n_train = 256;
        scfg.seed = seed;
        const Chain chain = generate_chain(target, scfg, ChainRole::Train, 0);
        SpectralVarianceEstimator est;
        est.truncation_point = 16;
        const TargetFunctional f =
            dim >= 2 ? TargetFunctional::coordinate_square(2) : TargetFunctional::coordinate(1);

        MultilayerPerceptron model = net;
        const bool lap_path = activation_supports_laplacian(act);
        if (lap_path) {
            const Eigen::VectorXd f_vals = f.evaluate_rows(chain.states);
            Eigen::MatrixXd grad_u(chain.length(), dim);
            {
                Eigen::VectorXd xx(dim), gg(dim);
                for (Eigen::Index k = 0; k < chain.length(); ++k) {
                    xx = chain.states.row(k).transpose();
                    target.grad_potential(xx, gg);
                    grad_u.row(k) = gg.transpose();
                }
            }
            auto loss_at = [&](const Eigen::VectorXd& theta) {
                MultilayerPerceptron m = model;
                m.set_parameters(theta);
                return esvm_loss(chain, f, m, target, est);
            };

            Eigen::VectorXd analytic = Eigen::VectorXd::Zero(model.parameter_count());
            {
                Eigen::MatrixXd grads;
                Eigen::VectorXd laps;
                model.derivative_rows(chain.states, grads, laps);
                const Eigen::VectorXd g =
                    laps - grads.cwiseProduct(grad_u).rowwise().sum();
                const Eigen::VectorXd hs = f_vals - g;
                std::vector<double> dv;
                spectral_variance_gradient(
                    std::span<const double>(hs.data(), static_cast<std::size_t>(hs.size())), est,
                    dv);
                auto scratch = model.make_gradient_scratch();
                Eigen::VectorXd xx(dim), wg(dim);
                for (Eigen::Index k = 0; k < chain.length(); ++k) {
                    const double lambda = dv[static_cast<std::size_t>(k)];
                    xx = chain.states.row(k).transpose();
                    wg = lambda * grad_u.row(k).transpose();
                    model.accumulate_parameter_gradient(xx, 0.0, wg, -lambda, *scratch, analytic);
                }
            }
            const Eigen::VectorXd theta0 = model.parameters();
            Eigen::VectorXd fd(theta0.size());
            Eigen::VectorXd theta = theta0;
            const double hp = 1e-5;
            for (Eigen::Index i = 0; i < theta0.size(); ++i) {
                theta[i] = theta0[i] + hp;
                const double up = loss_at(theta);
                theta[i] = theta0[i] - hp;
                const double dn = loss_at(theta);
                theta[i] = theta0[i];
                fd[i] = (up - dn) / (2.0 * hp);
            }
            const double pscale = std::max(1.0, fd.lpNorm<Eigen::Infinity>());
            result.max_parameter_rel_err = (analytic - fd).lpNorm<Eigen::Infinity>() / pscale;
        }
    }

    const bool grad_ok = result.max_gradient_rel_err < 1e-5;
    const bool lap_ok = !result.laplacian_checked || result.max_laplacian_rel_err < 1e-4;
    const bool param_ok = result.max_parameter_rel_err < 1e-4;
    result.passed = grad_ok && lap_ok && param_ok;
    return result;
}

}  // namespace steincv
