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
#include <cstdint>
#include <string>
#include <vector>

#include "targets.hpp"

namespace steincv {

enum class ChainRole { Train, Test };

/// A recorded Markov chain: n states of dimension d (row per state) plus the
/// generation metadata. Immutable once built; shareable across threads.
struct Chain {
    Eigen::MatrixXd states;  // n x d, row-major iteration order
    double step_size = 0.0;
    std::int64_t burn_in = 0;
    std::uint64_t seed = 0;
    std::string target_name;

    Eigen::Index length() const { return states.rows(); }
    Eigen::Index dim() const { return states.cols(); }
};

struct SamplerConfig {
    double step_size = 0.1;  // gamma
    std::int64_t n_burn = 0;
    std::int64_t n_train = 1;
    std::int64_t n_test = 1;
    std::int64_t n_test_chains = 1;  // T
    std::uint64_t seed = 0;

    void validate() const;
};

/// One Unadjusted Langevin step: x - gamma grad U(x) + sqrt(2 gamma) noise.
/// Throws DivergenceError if the drift is non-finite at x.
Eigen::VectorXd ula_step(const Eigen::Ref<const Eigen::VectorXd>& x, double step_size,
                         const Target& target, const Eigen::Ref<const Eigen::VectorXd>& noise);

/// Runs n_burn discarded steps from x0 and then records the next n states
/// (n = n_train or n_test according to the role). The RNG stream is derived
/// from (seed, role, chain_index), so train and test chains are independent
/// and every chain is reproducible in isolation.
Chain generate_chain(const Target& target, const SamplerConfig& cfg,
                     const Eigen::Ref<const Eigen::VectorXd>& x0, ChainRole role,
                     std::uint64_t chain_index);

/// Convenience overload starting from the origin.
Chain generate_chain(const Target& target, const SamplerConfig& cfg, ChainRole role,
                     std::uint64_t chain_index);

/// T independent test chains (chain_index 0..T-1), generated concurrently.
std::vector<Chain> generate_test_chains(const Target& target, const SamplerConfig& cfg,
                                        const Eigen::Ref<const Eigen::VectorXd>& x0);

std::vector<Chain> generate_test_chains(const Target& target, const SamplerConfig& cfg);

/// Chain file format: 24-byte header (magic "STCV", version u32 = 1, n u64,
/// d u64), then n*d little-endian float64 states in row-major order.
void save_chain(const Chain& chain, const std::string& path);
Chain load_chain(const std::string& path);

}  // namespace steincv
