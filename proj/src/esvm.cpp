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
#include "esvm.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <mutex>
#include <thread>

#include "errors.hpp"
#include "rng.hpp"

namespace steincv {

TargetFunctional TargetFunctional::coordinate_square(int coordinate) {
    if (coordinate < 1) throw ConfigError("functional coordinate must be >= 1");
    return TargetFunctional(Kind::CoordinateSquare, coordinate, nullptr);
}

TargetFunctional TargetFunctional::coordinate(int coordinate) {
    if (coordinate < 1) throw ConfigError("functional coordinate must be >= 1");
    return TargetFunctional(Kind::Coordinate, coordinate, nullptr);
}

TargetFunctional TargetFunctional::average_test_likelihood(
    std::shared_ptr<const LogRegData> data) {
    if (!data) throw ConfigError("average_test_likelihood needs a dataset handle");
    if (data->test_design.rows() == 0) throw ConfigError("dataset has no test rows");
    return TargetFunctional(Kind::AverageTestLikelihood, 0, std::move(data));
}

const char* TargetFunctional::name() const {
    switch (kind_) {
        case Kind::CoordinateSquare: return "coordinate_square";
        case Kind::Coordinate: return "coordinate";
        case Kind::AverageTestLikelihood: return "average_test_likelihood";
    }
    return "?";
}

double TargetFunctional::operator()(const Eigen::Ref<const Eigen::VectorXd>& x) const {
    switch (kind_) {
        case Kind::CoordinateSquare:
        case Kind::Coordinate: {
            if (coordinate_ > x.size()) {
                throw ConfigError("functional coordinate " + std::to_string(coordinate_) +
                                  " exceeds state dimension " + std::to_string(x.size()));
            }
            const double v = x[coordinate_ - 1];
            return kind_ == Kind::CoordinateSquare ? v * v : v;
        }
        case Kind::AverageTestLikelihood: {
            const Eigen::VectorXd margins = data_->test_design * x;
            double acc = 0.0;
            for (Eigen::Index i = 0; i < margins.size(); ++i) {
                const double p = 1.0 / (1.0 + std::exp(-margins[i]));
                acc += data_->test_labels[i] > 0.5 ? p : 1.0 - p;
            }
            return acc / static_cast<double>(margins.size());
        }
    }
    return 0.0;
}

Eigen::VectorXd TargetFunctional::evaluate_rows(
    const Eigen::Ref<const Eigen::MatrixXd>& states) const {
    Eigen::VectorXd out(states.rows());
    Eigen::VectorXd x(states.cols());
    for (Eigen::Index k = 0; k < states.rows(); ++k) {
        x = states.row(k).transpose();
        out[k] = (*this)(x);
    }
    return out;
}

namespace {

/// g_phi over every row of states, using the analytic gradient/Laplacian of
/// phi and the precomputed grad U rows.
Eigen::VectorXd control_variate_rows(const PhiFunction& phi,
                                     const Eigen::Ref<const Eigen::MatrixXd>& states,
                                     const Eigen::MatrixXd& grad_u) {
    Eigen::MatrixXd grads;
    Eigen::VectorXd laps;
    phi.derivative_rows(states, grads, laps);
    return laps - grads.cwiseProduct(grad_u).rowwise().sum();
}

Eigen::MatrixXd grad_potential_rows(const Target& target,
                                    const Eigen::Ref<const Eigen::MatrixXd>& states) {
    Eigen::MatrixXd out(states.rows(), states.cols());
    Eigen::VectorXd x(states.cols());
    Eigen::VectorXd g(states.cols());
    for (Eigen::Index k = 0; k < states.rows(); ++k) {
        x = states.row(k).transpose();
        target.grad_potential(x, g);
        out.row(k) = g.transpose();
    }
    return out;
}

constexpr std::int64_t kGradChunk = 2048;

}  // namespace

double esvm_loss(const Chain& chain, const TargetFunctional& f, const PhiFunction& phi,
                 const Target& target, const SpectralVarianceEstimator& est) {
    if (chain.length() == 0) throw ConfigError("esvm_loss needs a nonempty chain");
    const Eigen::VectorXd f_vals = f.evaluate_rows(chain.states);
    const Eigen::MatrixXd grad_u = grad_potential_rows(target, chain.states);
    const Eigen::VectorXd g = control_variate_rows(phi, chain.states, grad_u);
    const Eigen::VectorXd h = f_vals - g;
    return spectral_variance(std::span<const double>(h.data(), static_cast<std::size_t>(h.size())),
                             est);
}

TrainResult train(const Chain& chain, const TargetFunctional& f, TrainablePhi& model,
                  const Target& target, const SpectralVarianceEstimator& est,
                  const TrainOptions& opts) {
    const Eigen::Index n = chain.length();
    if (n == 0) throw ConfigError("train needs a nonempty chain");
    const auto b_n = static_cast<Eigen::Index>(est.truncation_point);
    if (b_n > n) throw ConfigError("truncation point b_n exceeds training chain length");
    if (opts.minibatch_window != 0) {
        if (opts.minibatch_window < 4 * b_n) {
            throw ConfigError("minibatch window must be at least 4*b_n");
        }
        if (opts.minibatch_window > n) {
            throw ConfigError("minibatch window exceeds training chain length");
        }
    }
    opts.adam.validate();

    const Eigen::VectorXd f_vals = f.evaluate_rows(chain.states);
    const Eigen::MatrixXd grad_u = grad_potential_rows(target, chain.states);

    TrainResult result;
    Eigen::VectorXd params = model.parameters();
    Eigen::VectorXd best_params = params;
    result.best_loss = std::numeric_limits<double>::infinity();
    AdamState adam(params.size(), opts.adam);
    Rng window_rng(opts.seed, kStreamMinibatch, 0);

    const auto full_loss = [&]() {
        const Eigen::VectorXd g = control_variate_rows(model, chain.states, grad_u);
        const Eigen::VectorXd h = f_vals - g;
        return spectral_variance(
            std::span<const double>(h.data(), static_cast<std::size_t>(h.size())), est);
    };

    if (opts.epochs <= 0) {
        result.initial_loss = full_loss();
        result.best_loss = result.initial_loss;
        return result;
    }

    std::vector<double> grad_scalar;  // dV/dh over the active window
    for (int epoch = 0; epoch < opts.epochs; ++epoch) {
        Eigen::Index begin = 0;
        Eigen::Index len = n;
        if (opts.minibatch_window != 0) {
            len = static_cast<Eigen::Index>(opts.minibatch_window);
            const auto max_start = static_cast<std::uint64_t>(n - len + 1);
            begin = static_cast<Eigen::Index>(window_rng.next_u64() % max_start);
        }
        const auto states = chain.states.middleRows(begin, len);
        const auto gu = grad_u.middleRows(begin, len);

        const Eigen::VectorXd g = control_variate_rows(model, states, gu);
        const Eigen::VectorXd h = f_vals.segment(begin, len) - g;
        const double loss = spectral_variance(
            std::span<const double>(h.data(), static_cast<std::size_t>(h.size())), est);

        if (epoch == 0) result.initial_loss = loss;
        if (!std::isfinite(loss)) {
            result.aborted = true;
            result.diagnostic = "non-finite training loss at epoch " + std::to_string(epoch);
            break;
        }
        result.loss_trace.push_back(loss);
        if (loss < result.best_loss) {
            result.best_loss = loss;
            result.best_epoch = epoch;
            best_params = params;
        }

        spectral_variance_gradient(
            std::span<const double>(h.data(), static_cast<std::size_t>(h.size())), est,
            grad_scalar);

        // dLoss/dtheta = sum_k (dV/dh_k) * d(f_k - g_k)/dtheta
        //             = sum_k lambda_k * (grad U(X_k) . dgrad_phi - dlap_phi).
        // Points are accumulated in chunks of fixed size and combined in chunk
        // order, so parallel evaluation reproduces the serial sum exactly.
        const auto n_chunks = static_cast<std::size_t>((len + kGradChunk - 1) / kGradChunk);
        std::vector<Eigen::VectorXd> partials(n_chunks);

        auto run_chunk = [&](std::size_t chunk) {
            const Eigen::Index lo = static_cast<Eigen::Index>(chunk) * kGradChunk;
            const Eigen::Index hi = std::min(lo + kGradChunk, len);
            Eigen::VectorXd local = Eigen::VectorXd::Zero(params.size());
            auto scratch = model.make_gradient_scratch();
            Eigen::VectorXd x(chain.dim());
            Eigen::VectorXd w_gamma(chain.dim());
            for (Eigen::Index k = lo; k < hi; ++k) {
                const double lambda = grad_scalar[static_cast<std::size_t>(k)];
                if (lambda == 0.0) continue;
                x = states.row(k).transpose();
                w_gamma = lambda * gu.row(k).transpose();
                model.accumulate_parameter_gradient(x, 0.0, w_gamma, -lambda, *scratch, local);
            }
            partials[chunk] = std::move(local);
        };

        if (opts.parallel && n_chunks > 1) {
            const unsigned n_workers = std::min<unsigned>(
                std::max(1u, std::thread::hardware_concurrency()), static_cast<unsigned>(n_chunks));
            std::atomic<std::size_t> next{0};
            std::vector<std::thread> pool;
            pool.reserve(n_workers);
            for (unsigned w = 0; w < n_workers; ++w) {
                pool.emplace_back([&]() {
                    for (;;) {
                        const std::size_t c = next.fetch_add(1);
                        if (c >= n_chunks) return;
                        run_chunk(c);
                    }
                });
            }
            for (auto& t : pool) t.join();
        } else {
            for (std::size_t c = 0; c < n_chunks; ++c) run_chunk(c);
        }

        Eigen::VectorXd grad = Eigen::VectorXd::Zero(params.size());
        for (std::size_t c = 0; c < n_chunks; ++c) grad += partials[c];

        adam.step(params, grad);
        model.set_parameters(params);
    }

    if (result.best_epoch >= 0 || result.aborted) {
        model.set_parameters(best_params);
    }
    if (result.loss_trace.empty() && !result.aborted) {
        result.initial_loss = full_loss();
        result.best_loss = result.initial_loss;
    }
    return result;
}

BoxplotStats boxplot_stats(std::vector<double> values) {
    if (values.empty()) throw ConfigError("boxplot of an empty sample");
    std::sort(values.begin(), values.end());
    const auto quantile = [&](double p) {
        const double pos = p * static_cast<double>(values.size() - 1);
        const auto lo = static_cast<std::size_t>(pos);
        if (lo + 1 >= values.size()) return values.back();
        const double frac = pos - static_cast<double>(lo);
        return values[lo] * (1.0 - frac) + values[lo + 1] * frac;
    };
    BoxplotStats stats;
    stats.min = values.front();
    stats.q1 = quantile(0.25);
    stats.median = quantile(0.5);
    stats.q3 = quantile(0.75);
    stats.max = values.back();
    return stats;
}

EsvmReport evaluate(const std::vector<Chain>& test_chains, const TargetFunctional& f,
                    const PhiFunction& phi, const Target& target,
                    const SpectralVarianceEstimator& est) {
    if (test_chains.empty()) throw ConfigError("evaluate needs at least one test chain");
    const std::size_t n_chains = test_chains.size();
    EsvmReport report;
    report.per_chain.resize(n_chains);

    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto worker = [&]() {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= n_chains) return;
            try {
                const Chain& chain = test_chains[i];
                if (chain.dim() != target.dim()) {
                    throw ConfigError("test chain dimension does not match target");
                }
                const Eigen::VectorXd f_vals = f.evaluate_rows(chain.states);
                const Eigen::MatrixXd grad_u = grad_potential_rows(target, chain.states);
                const Eigen::VectorXd g = control_variate_rows(phi, chain.states, grad_u);
                const Eigen::VectorXd h = f_vals - g;
                ChainEvaluation ev;
                ev.chain_index = i;
                ev.v_f = spectral_variance(
                    std::span<const double>(f_vals.data(), static_cast<std::size_t>(f_vals.size())),
                    est);
                ev.v_fg = spectral_variance(
                    std::span<const double>(h.data(), static_cast<std::size_t>(h.size())), est);
                ev.pi_f = f_vals.mean();
                ev.pi_fg = h.mean();
                if (ev.v_fg == 0.0) {
                    ev.ratio_infinite = true;
                    ev.ratio = std::numeric_limits<double>::infinity();
                } else {
                    ev.ratio = ev.v_f / ev.v_fg;
                }
                report.per_chain[i] = ev;
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!error) error = std::current_exception();
                return;
            }
        }
    };
    const unsigned n_workers = std::min<unsigned>(std::max(1u, std::thread::hardware_concurrency()),
                                                  static_cast<unsigned>(n_chains));
    if (n_workers <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(n_workers);
        for (unsigned w = 0; w < n_workers; ++w) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    if (error) std::rethrow_exception(error);

    std::vector<double> ratios, pi_f, pi_fg;
    double sum_vf = 0.0;
    double sum_vfg = 0.0;
    double ratio_sum = 0.0;
    for (const ChainEvaluation& ev : report.per_chain) {
        ratios.push_back(ev.ratio);
        pi_f.push_back(ev.pi_f);
        pi_fg.push_back(ev.pi_fg);
        sum_vf += ev.v_f;
        sum_vfg += ev.v_fg;
        ratio_sum += ev.ratio;
        if (ev.ratio_infinite) report.has_infinite_ratio = true;
    }
    std::sort(ratios.begin(), ratios.end());
    const std::size_t mid = ratios.size() / 2;
    report.esvrr_median = ratios.size() % 2 == 1 ? ratios[mid]
                                                 : 0.5 * (ratios[mid - 1] + ratios[mid]);
    report.median_infinite = std::isinf(report.esvrr_median);
    report.esvrr_mean = ratio_sum / static_cast<double>(ratios.size());
    report.mean_infinite = std::isinf(report.esvrr_mean);
    report.esvrr_pooled = sum_vfg == 0.0 ? std::numeric_limits<double>::infinity()
                                         : sum_vf / sum_vfg;
    report.plain = boxplot_stats(pi_f);
    report.cv = boxplot_stats(pi_fg);
    return report;
}

}  // namespace steincv
