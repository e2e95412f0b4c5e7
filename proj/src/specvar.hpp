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

#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace steincv {

/// Symmetric lag-window kernel w on [-1,1] with 0 <= w <= 1 and w == 0
/// outside. The triangular (Bartlett) kernel is the default used by the
/// experiments; the trapezoidal kernel additionally satisfies w(s) = 1 on
/// [-1/2,1/2]. Custom windows are given as a table of values at equally
/// spaced points of [0,1] (linearly interpolated, extended by symmetry).
class LagWindow {
public:
    enum class Kind { Triangular, Trapezoidal, Custom };

    static LagWindow triangular();
    static LagWindow trapezoidal();
    static LagWindow custom(std::vector<double> half_table);
    static LagWindow from_name(const std::string& name);

    double operator()(double s) const;
    Kind kind() const { return kind_; }
    const char* name() const;

private:
    LagWindow(Kind kind, std::vector<double> table) : kind_(kind), table_(std::move(table)) {}
    Kind kind_;
    std::vector<double> table_;
};

/// 1+s on [-1,0), 1-s on [0,1], 0 outside.
double triangular_window(double s);

/// 1 on [-1/2,1/2], linear decay to 0 at +-1, 0 outside.
double trapezoidal_window(double s);

/// Lag-s sample autocovariance: n^{-1} sum_{k=0}^{n-s-1} (h_k - hbar)(h_{k+s} - hbar).
/// Throws std::out_of_range for s >= n.
double sample_autocovariance(std::span<const double> h, std::size_t s);

struct SpectralVarianceEstimator {
    LagWindow window = LagWindow::triangular();
    std::size_t truncation_point = 1;  // b_n
};

/// Spectral variance estimate: sum_{s=-(b_n-1)}^{b_n-1} w(s/b_n) rho(|s|),
/// with rho the sample autocovariance. Autocovariances are summed directly
/// (b_n is small in every experiment); no FFT path exists by design.
/// Throws std::out_of_range if the series is shorter than b_n.
double spectral_variance(std::span<const double> h, const SpectralVarianceEstimator& est);

/// Gradient of spectral_variance with respect to every series entry, written
/// into grad (resized to h.size()). Used by the training loop; verified
/// against finite differences in the test suite.
void spectral_variance_gradient(std::span<const double> h, const SpectralVarianceEstimator& est,
                                std::vector<double>& grad);

/// Standard normal quantile via the Acklam rational approximation
/// (absolute error < 1.2e-9 over (0,1)). Throws std::domain_error outside (0,1).
double normal_quantile(double p);

/// Asymptotic confidence interval: estimate -+ c_{1-delta/2} sqrt(V / N).
/// Throws std::domain_error for V < 0 or delta outside (0,1).
std::pair<double, double> confidence_interval(double estimate, double asymptotic_variance,
                                              std::size_t n_samples, double delta);

/// Truncation point heuristic b_n = 2 log(n) / log(1/rho), clamped to >= 1.
std::size_t truncation_point_for(double rho, std::size_t n);

}  // namespace steincv
