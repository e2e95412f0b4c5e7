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
#include "specvar.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "errors.hpp"

namespace steincv {

double triangular_window(double s) {
    if (s >= -1.0 && s < 0.0) return 1.0 + s;
    if (s >= 0.0 && s <= 1.0) return 1.0 - s;
    return 0.0;
}

double trapezoidal_window(double s) {
    const double a = std::abs(s);
    if (a > 1.0) return 0.0;
    return std::min(1.0, 2.0 * (1.0 - a));
}

LagWindow LagWindow::triangular() { return LagWindow(Kind::Triangular, {}); }

LagWindow LagWindow::trapezoidal() { return LagWindow(Kind::Trapezoidal, {}); }

LagWindow LagWindow::custom(std::vector<double> half_table) {
    if (half_table.size() < 2) throw ConfigError("custom lag window needs at least 2 table values");
    for (double v : half_table) {
        if (!(v >= 0.0 && v <= 1.0)) throw ConfigError("custom lag window values must lie in [0,1]");
    }
    return LagWindow(Kind::Custom, std::move(half_table));
}

LagWindow LagWindow::from_name(const std::string& name) {
    if (name == "triangular") return triangular();
    if (name == "trapezoidal") return trapezoidal();
    throw ConfigError("unknown lag window '" + name + "' (expected triangular or trapezoidal)");
}

const char* LagWindow::name() const {
    switch (kind_) {
        case Kind::Triangular: return "triangular";
        case Kind::Trapezoidal: return "trapezoidal";
        case Kind::Custom: return "custom";
    }
    return "?";
}

double LagWindow::operator()(double s) const {
    switch (kind_) {
        case Kind::Triangular: return triangular_window(s);
        case Kind::Trapezoidal: return trapezoidal_window(s);
        case Kind::Custom: {
            const double a = std::abs(s);
            if (a > 1.0) return 0.0;
            const double pos = a * static_cast<double>(table_.size() - 1);
            const auto lo = static_cast<std::size_t>(pos);
            if (lo + 1 >= table_.size()) return table_.back();
            const double t = pos - static_cast<double>(lo);
            return table_[lo] * (1.0 - t) + table_[lo + 1] * t;
        }
    }
    return 0.0;
}

double sample_autocovariance(std::span<const double> h, std::size_t s) {
    const std::size_t n = h.size();
    if (s >= n) throw std::out_of_range("autocovariance lag s=" + std::to_string(s) +
                                        " out of range for series of length " + std::to_string(n));
    const double mean = std::accumulate(h.begin(), h.end(), 0.0) / static_cast<double>(n);
    double acc = 0.0;
    for (std::size_t k = 0; k + s < n; ++k) acc += (h[k] - mean) * (h[k + s] - mean);
    return acc / static_cast<double>(n);
}

namespace {

// Effective weight of rho(s): w(0) at s = 0, w(s/b) + w(-s/b) for s >= 1.
std::vector<double> folded_weights(const LagWindow& w, std::size_t b_n) {
    std::vector<double> coef(b_n);
    coef[0] = w(0.0);
    for (std::size_t s = 1; s < b_n; ++s) {
        const double x = static_cast<double>(s) / static_cast<double>(b_n);
        coef[s] = w(x) + w(-x);
    }
    return coef;
}

}  // namespace

double spectral_variance(std::span<const double> h, const SpectralVarianceEstimator& est) {
    const std::size_t n = h.size();
    const std::size_t b_n = est.truncation_point;
    if (b_n == 0) throw ConfigError("truncation point b_n must be positive");
    if (n < b_n) throw std::out_of_range("series of length " + std::to_string(n) +
                                         " shorter than truncation point b_n=" + std::to_string(b_n));
    const double mean = std::accumulate(h.begin(), h.end(), 0.0) / static_cast<double>(n);
    std::vector<double> c(n);
    for (std::size_t k = 0; k < n; ++k) c[k] = h[k] - mean;

    const std::vector<double> coef = folded_weights(est.window, b_n);
    double v = 0.0;
    for (std::size_t s = 0; s < b_n; ++s) {
        double rho = 0.0;
        for (std::size_t k = 0; k + s < n; ++k) rho += c[k] * c[k + s];
        v += coef[s] * rho / static_cast<double>(n);
    }
    return v;
}

void spectral_variance_gradient(std::span<const double> h, const SpectralVarianceEstimator& est,
                                std::vector<double>& grad) {
    const std::size_t n = h.size();
    const std::size_t b_n = est.truncation_point;
    if (b_n == 0) throw ConfigError("truncation point b_n must be positive");
    if (n < b_n) throw std::out_of_range("series shorter than truncation point");
    const double mean = std::accumulate(h.begin(), h.end(), 0.0) / static_cast<double>(n);
    std::vector<double> c(n);
    for (std::size_t k = 0; k < n; ++k) c[k] = h[k] - mean;

    const std::vector<double> coef = folded_weights(est.window, b_n);
    grad.assign(n, 0.0);
    const double inv_n = 1.0 / static_cast<double>(n);
    // dV/dc_j = sum_s coef[s]/n * (c_{j+s} + c_{j-s}), indices clipped to the
    // valid range of each lag-s sum.
    for (std::size_t s = 0; s < b_n; ++s) {
        const double w = coef[s] * inv_n;
        if (s == 0) {
            for (std::size_t j = 0; j < n; ++j) grad[j] += w * 2.0 * c[j];
            continue;
        }
        for (std::size_t j = 0; j + s < n; ++j) grad[j] += w * c[j + s];
        for (std::size_t j = s; j < n; ++j) grad[j] += w * c[j - s];
    }
    // Centering: dV/dh_j = dV/dc_j - mean_i dV/dc_i.
    const double gmean = std::accumulate(grad.begin(), grad.end(), 0.0) * inv_n;
    for (std::size_t j = 0; j < n; ++j) grad[j] -= gmean;
}

double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) throw std::domain_error("normal_quantile requires p in (0,1)");
    // Acklam's rational approximation, central region |p - 1/2| <= 0.47575
    // plus tail refinements; coefficients as published.
    static const double a[6] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                -2.759285104469687e+02, 1.383577518672690e+02,
                                -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[5] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                -1.556989798598866e+02, 6.680131188771972e+01,
                                -1.328068155288572e+01};
    static const double c[6] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                -2.400758277161838e+00, -2.549732539343734e+00,
                                4.374664141464968e+00,  2.938163982698783e+00};
    static const double d[4] = {7.784695709041462e-03, 3.224671290700398e-01,
                                2.445134137142996e+00, 3.754408661907416e+00};
    const double p_low = 0.02425;
    const double p_high = 1.0 - p_low;
    if (p < p_low) {
        const double q = std::sqrt(-2.0 * std::log(p));
        return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
               ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    if (p <= p_high) {
        const double q = p - 0.5;
        const double r = q * q;
        return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
               (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    }
    const double q = std::sqrt(-2.0 * std::log(1.0 - p));
    return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
}

std::pair<double, double> confidence_interval(double estimate, double asymptotic_variance,
                                              std::size_t n_samples, double delta) {
    if (asymptotic_variance < 0.0) throw std::domain_error("asymptotic variance must be nonnegative");
    if (!(delta > 0.0 && delta < 1.0)) throw std::domain_error("delta must lie in (0,1)");
    if (n_samples == 0) throw std::domain_error("sample count must be positive");
    const double c = normal_quantile(1.0 - delta / 2.0);
    const double half = c * std::sqrt(asymptotic_variance / static_cast<double>(n_samples));
    return {estimate - half, estimate + half};
}

std::size_t truncation_point_for(double rho, std::size_t n) {
    if (!(rho > 0.0 && rho < 1.0)) throw std::domain_error("rho must lie in (0,1)");
    if (n < 2) return 1;
    const double b = 2.0 * std::log(static_cast<double>(n)) / std::log(1.0 / rho);
    return std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(b)));
}

}  // namespace steincv
