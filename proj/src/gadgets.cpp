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
#include "gadgets.hpp"

#include <stdexcept>
#include <string>

#include "errors.hpp"

namespace steincv {

namespace {

// Identity block: t = [s(t+1) - s(-t-1) + s(t-1) - s(-t+1) - 2 s(t) + 2 s(-t)] / 6.
const double kIdIn[6] = {1, -1, 1, -1, 1, -1};
const double kIdShift[6] = {-1, 1, 1, -1, 0, 0};
const double kIdOut[6] = {1.0 / 6, -1.0 / 6, 1.0 / 6, -1.0 / 6, -2.0 / 6, 2.0 / 6};

// Square block: t^2 + 1/3 = [s(t+1) - s(-t-1) - s(t-1) + s(-t+1)] / 6.
const double kSqIn[4] = {1, -1, 1, -1};
const double kSqShift[4] = {-1, 1, 1, -1};
const double kSqOut[4] = {1.0 / 6, -1.0 / 6, -1.0 / 6, 1.0 / 6};

}  // namespace

MultilayerPerceptron make_cube_gadget() {
    MultilayerPerceptron net({1, 2, 1}, Activation::ReCU, false);
    net.weight(0) << 1, -1;
    net.weight(1) << 1, -1;
    return net;
}

MultilayerPerceptron make_identity_gadget() {
    MultilayerPerceptron net({1, 6, 6, 1}, Activation::ReCU, false);
    for (int i = 0; i < 6; ++i) {
        net.weight(0)(i, 0) = kIdIn[i];
        net.shift(1)[i] = kIdShift[i];
        net.shift(2)[i] = kIdShift[i];
        net.weight(2)(0, i) = kIdOut[i];
        for (int j = 0; j < 6; ++j) net.weight(1)(i, j) = kIdIn[i] * kIdOut[j];
    }
    return net;
}

MultilayerPerceptron make_square_gadget() {
    MultilayerPerceptron net({1, 4, 6, 1}, Activation::ReCU, true);
    for (int i = 0; i < 4; ++i) {
        net.weight(0)(i, 0) = kSqIn[i];
        net.shift(1)[i] = kSqShift[i];
    }
    // Layer 2 is an identity block applied to t = x^2 + 1/3; the output bias
    // removes the surplus 1/3.
    for (int i = 0; i < 6; ++i) {
        net.shift(2)[i] = kIdShift[i];
        net.weight(2)(0, i) = kIdOut[i];
        for (int j = 0; j < 4; ++j) net.weight(1)(i, j) = kIdIn[i] * kSqOut[j];
    }
    net.bias() = -1.0 / 3.0;
    return net;
}

MultilayerPerceptron make_square_gadget_strict() {
    MultilayerPerceptron net({1, 5, 6, 1}, Activation::ReCU, false);
    // Four cube units plus one constant unit s(0*x + 1) = 1.
    for (int i = 0; i < 4; ++i) {
        net.weight(0)(i, 0) = kSqIn[i];
        net.shift(1)[i] = kSqShift[i];
    }
    net.weight(0)(4, 0) = 0.0;
    net.shift(1)[4] = -1.0;
    // Combine to x^2 = (x^2 + 1/3) - (2/6) * 1, then pass through an identity block.
    const double combo[5] = {kSqOut[0], kSqOut[1], kSqOut[2], kSqOut[3], -2.0 / 6};
    for (int i = 0; i < 6; ++i) {
        net.shift(2)[i] = kIdShift[i];
        net.weight(2)(0, i) = kIdOut[i];
        for (int j = 0; j < 5; ++j) net.weight(1)(i, j) = kIdIn[i] * combo[j];
    }
    return net;
}

MultilayerPerceptron make_product_gadget() {
    MultilayerPerceptron net({2, 8, 6, 6, 1}, Activation::ReCU, false);
    // Square blocks of a = x1 + x2 (units 0..3) and b = x1 - x2 (units 4..7);
    // the surplus thirds cancel in (a^2 + 1/3 - b^2 - 1/3)/4 = x1 x2.
    for (int i = 0; i < 4; ++i) {
        net.weight(0)(i, 0) = kSqIn[i];
        net.weight(0)(i, 1) = kSqIn[i];
        net.shift(1)[i] = kSqShift[i];
        net.weight(0)(4 + i, 0) = kSqIn[i];
        net.weight(0)(4 + i, 1) = -kSqIn[i];
        net.shift(1)[4 + i] = kSqShift[i];
    }
    double combo[8];
    for (int j = 0; j < 4; ++j) {
        combo[j] = kSqOut[j] / 4.0;
        combo[4 + j] = -kSqOut[j] / 4.0;
    }
    // Two stacked identity blocks carry the product to the output.
    for (int i = 0; i < 6; ++i) {
        net.shift(2)[i] = kIdShift[i];
        net.shift(3)[i] = kIdShift[i];
        net.weight(3)(0, i) = kIdOut[i];
        for (int j = 0; j < 8; ++j) net.weight(1)(i, j) = kIdIn[i] * combo[j];
        for (int j = 0; j < 6; ++j) net.weight(2)(i, j) = kIdIn[i] * kIdOut[j];
    }
    return net;
}

bool verify_gadget_weight_bounds(const MultilayerPerceptron& net) {
    const int L = net.hidden_layers();
    for (int i = 0; i <= L; ++i) {
        if (net.weight(i).cwiseAbs().maxCoeff() > 1.0) return false;
    }
    for (int l = 1; l <= L; ++l) {
        if (net.shift(l).size() > 0 && net.shift(l).cwiseAbs().maxCoeff() > 1.0) return false;
    }
    if (net.has_bias() && std::abs(net.bias()) > 1.0) return false;
    return true;
}

KnotVector::KnotVector(int order_, int grid_size_) : order(order_), grid_size(grid_size_) {
    if (order < 0) throw ConfigError("knot vector order q must be nonnegative");
    if (grid_size < 1) throw ConfigError("knot vector grid size K must be positive");
    knots.resize(static_cast<std::size_t>(count()));
    for (int i = 0; i <= order; ++i) knots[static_cast<std::size_t>(i)] = 0.0;
    for (int j = 1; j <= grid_size - 1; ++j) {
        knots[static_cast<std::size_t>(order + j)] =
            static_cast<double>(j) / static_cast<double>(grid_size);
    }
    for (int i = order + grid_size; i < count(); ++i) knots[static_cast<std::size_t>(i)] = 1.0;
}

double bspline_eval(int j, int m, const KnotVector& knots, double x) {
    if (m < 0 || m > knots.order) {
        throw std::out_of_range("B-spline order m=" + std::to_string(m) + " outside 0..q");
    }
    const int max_j = 2 * knots.order + knots.grid_size - m;
    if (j < 1 || j > max_j) {
        throw std::out_of_range("B-spline index j=" + std::to_string(j) + " outside 1.." +
                                std::to_string(max_j) + " for order m=" + std::to_string(m));
    }
    if (m == 0) {
        if (knots.a(j) < knots.a(j + 1) && knots.a(j) <= x && x < knots.a(j + 1)) {
            return 1.0 / (knots.a(j + 1) - knots.a(j));
        }
        return 0.0;
    }
    if (!(knots.a(j) < knots.a(j + m + 1) && knots.a(j) <= x && x < knots.a(j + m + 1))) {
        return 0.0;
    }
    const double left = (x - knots.a(j)) * bspline_eval(j, m - 1, knots, x);
    const double right = (knots.a(j + m + 1) - x) * bspline_eval(j + 1, m - 1, knots, x);
    return (left + right) / (knots.a(j + m + 1) - knots.a(j));
}

}  // namespace steincv
