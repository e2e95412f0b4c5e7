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

#include <vector>

#include "mlp.hpp"

namespace steincv {

// Exact ReCU gadget networks. The building blocks are the cube identities
//   sigma(x) - sigma(-x)                          = x^3
//   ((x+1)^3 + (x-1)^3 - 2 x^3) / 6               = x
//   ((x+1)^3 - (x-1)^3 - 2) / 6                   = x^2
//   ((x1+x2)^2 - (x1-x2)^2) / 4                   = x1 x2
// realized with weights and shifts inside [-1,1]. Each gadget is exact on all
// of R (resp. R^2), not merely an approximation.

/// 2-layer net computing x^3.
MultilayerPerceptron make_cube_gadget();

/// 3-layer net computing x.
MultilayerPerceptron make_identity_gadget();

/// 3-layer net computing x^2, using an output bias of -1/3.
MultilayerPerceptron make_square_gadget();

/// Bias-free 3-layer variant of the square gadget; the constant is produced
/// by a shifted activation unit fed with weight zero.
MultilayerPerceptron make_square_gadget_strict();

/// 4-layer net computing x1*x2 via the polarization identity.
MultilayerPerceptron make_product_gadget();

/// True iff every weight, shift and bias of the network lies in [-1,1].
bool verify_gadget_weight_bounds(const MultilayerPerceptron& net);

/// Clamped knot vector on [0,1]: q+1 zeros, interior knots j/K, q+1 ones;
/// 2q+K+1 knots in total (1-based a_1..a_{2q+K+1} in the recursion below).
struct KnotVector {
    KnotVector(int order, int grid_size);

    int order;      // q
    int grid_size;  // K
    std::vector<double> knots;

    /// 1-based knot accessor a_j.
    double a(int j) const { return knots[static_cast<std::size_t>(j - 1)]; }
    int count() const { return 2 * order + grid_size + 1; }
};

/// B-spline B_j^{m,K}(x) by the two-case recursion with base
/// B_j^{0,K} = 1/(a_{j+1}-a_j) on [a_j, a_{j+1}) (and 0 elsewhere). Note the
/// base normalization: this family is not a partition of unity. j is 1-based
/// with 1 <= j <= 2q+K-m; throws std::out_of_range otherwise.
double bspline_eval(int j, int m, const KnotVector& knots, double x);

}  // namespace steincv
