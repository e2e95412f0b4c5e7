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
#include <memory>
#include <string>
#include <vector>

#include "adam.hpp"
#include "phi.hpp"
#include "sampler.hpp"
#include "specvar.hpp"
#include "targets.hpp"

namespace steincv {

/// The function of interest f whose expectation under pi is estimated.
/// Coordinates are 1-based (the default experiment functional is f(X) = X_2^2).
class TargetFunctional {
public:
    enum class Kind { CoordinateSquare, Coordinate, AverageTestLikelihood };

    static TargetFunctional coordinate_square(int coordinate);
    static TargetFunctional coordinate(int coordinate);
    static TargetFunctional average_test_likelihood(std::shared_ptr<const LogRegData> data);

    Kind kind() const { return kind_; }
    int coordinate() const { return coordinate_; }
    const char* name() const;

    double operator()(const Eigen::Ref<const Eigen::VectorXd>& x) const;
    Eigen::VectorXd evaluate_rows(const Eigen::Ref<const Eigen::MatrixXd>& states) const;

private:
    TargetFunctional(Kind kind, int coordinate, std::shared_ptr<const LogRegData> data)
        : kind_(kind), coordinate_(coordinate), data_(std::move(data)) {}

    Kind kind_;
    int coordinate_;
    std::shared_ptr<const LogRegData> data_;
};

/// Series h_k = f(X_k) - g_phi(X_k) over the chain and its spectral variance.
double esvm_loss(const Chain& chain, const TargetFunctional& f, const PhiFunction& phi,
                 const Target& target, const SpectralVarianceEstimator& est);

struct TrainOptions {
    AdamConfig adam;
    int epochs = 500;
    /// 0 trains on the full chain each epoch; otherwise a contiguous window
    /// of this length (>= 4 b_n) with a seeded random start per epoch.
    std::int64_t minibatch_window = 0;
    /// Evaluate per-point gradients on parallel chunks. The summation order
    /// is fixed (chunks of 2048 points combined in index order), so gradients
    /// are bit-identical to the serial path.
    bool parallel = false;
    std::uint64_t seed = 0;
};

struct TrainResult {
    std::vector<double> loss_trace;  // loss at the start of each epoch
    double initial_loss = 0.0;
    double best_loss = 0.0;
    int best_epoch = -1;
    bool aborted = false;
    std::string diagnostic;
};

/// ESVM training: gradient descent (Adam) on V_n(f - g_phi) over the training
/// chain. The model is left holding the parameters of the lowest recorded
/// loss, which is not necessarily the last epoch. A non-finite loss aborts
/// training, keeping the last finite best snapshot and a diagnostic.
TrainResult train(const Chain& chain, const TargetFunctional& f, TrainablePhi& model,
                  const Target& target, const SpectralVarianceEstimator& est,
                  const TrainOptions& opts);

struct ChainEvaluation {
    std::uint64_t chain_index = 0;
    double v_f = 0.0;    // V_n(f)
    double v_fg = 0.0;   // V_n(f - g)
    double pi_f = 0.0;   // pi_N(f)
    double pi_fg = 0.0;  // pi_N(f - g)
    double ratio = 0.0;  // per-chain ESVRR (meaningless when ratio_infinite)
    bool ratio_infinite = false;
};

struct BoxplotStats {
    double min = 0.0, q1 = 0.0, median = 0.0, q3 = 0.0, max = 0.0;
};

struct EsvmReport {
    std::vector<ChainEvaluation> per_chain;
    double esvrr_median = 0.0;  // median over chains of V_n(f)/V_n(f-g)
    double esvrr_mean = 0.0;
    double esvrr_pooled = 0.0;  // sum V_n(f) / sum V_n(f-g)
    bool has_infinite_ratio = false;
    bool median_infinite = false;
    bool mean_infinite = false;
    BoxplotStats plain;  // quartiles of pi_N(f) across chains
    BoxplotStats cv;     // quartiles of pi_N(f - g) across chains
    TrainResult training;
    std::vector<std::string> deviations;
};

/// Quartiles with linear interpolation between order statistics.
BoxplotStats boxplot_stats(std::vector<double> values);

/// Per-chain spectral variances and averages for the plain and
/// control-variate estimators, plus the ESVRR aggregates.
EsvmReport evaluate(const std::vector<Chain>& test_chains, const TargetFunctional& f,
                    const PhiFunction& phi, const Target& target,
                    const SpectralVarianceEstimator& est);

}  // namespace steincv
