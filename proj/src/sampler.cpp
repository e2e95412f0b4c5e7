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
#include "sampler.hpp"

#include <atomic>
#include <cmath>
#include <cstring>
#include <fstream>
#include <thread>

#include "errors.hpp"
#include "rng.hpp"

namespace steincv {

void SamplerConfig::validate() const {
    if (!(step_size > 0.0)) throw ConfigError("sampler step size gamma must be positive");
    if (n_burn < 0) throw ConfigError("n_burn must be nonnegative");
    if (n_train < 1) throw ConfigError("n_train must be positive");
    if (n_test < 1) throw ConfigError("n_test must be positive");
    if (n_test_chains < 1) throw ConfigError("number of test chains T must be >= 1");
}

Eigen::VectorXd ula_step(const Eigen::Ref<const Eigen::VectorXd>& x, double step_size,
                         const Target& target, const Eigen::Ref<const Eigen::VectorXd>& noise) {
    if (x.size() != noise.size()) throw ConfigError("ula_step: state and noise dimensions differ");
    Eigen::VectorXd grad = target.grad_potential(x);
    if (!grad.allFinite()) {
        throw DivergenceError("ULA drift is non-finite",
                              std::vector<double>(x.data(), x.data() + x.size()));
    }
    return x - step_size * grad + std::sqrt(2.0 * step_size) * noise;
}

namespace {

std::uint64_t role_tag(ChainRole role) {
    return role == ChainRole::Train ? kStreamTrain : kStreamTest;
}

}  // namespace

Chain generate_chain(const Target& target, const SamplerConfig& cfg,
                     const Eigen::Ref<const Eigen::VectorXd>& x0, ChainRole role,
                     std::uint64_t chain_index) {
    cfg.validate();
    const int d = target.dim();
    if (x0.size() != d) throw ConfigError("initial state dimension does not match target");
    if (!x0.allFinite()) throw ConfigError("initial state must be finite");

    const std::int64_t n = role == ChainRole::Train ? cfg.n_train : cfg.n_test;
    Rng rng(cfg.seed, role_tag(role), chain_index);

    Chain chain;
    chain.states.resize(n, d);
    chain.step_size = cfg.step_size;
    chain.burn_in = cfg.n_burn;
    chain.seed = cfg.seed;
    chain.target_name = target.name();

    Eigen::VectorXd x = x0;
    Eigen::VectorXd grad(d);
    Eigen::VectorXd noise(d);
    const double scale = std::sqrt(2.0 * cfg.step_size);
    for (std::int64_t step = 0; step < cfg.n_burn + n; ++step) {
        target.grad_potential(x, grad);
        for (int j = 0; j < d; ++j) noise[j] = rng.normal();
        x -= cfg.step_size * grad;
        x += scale * noise;
        if (!x.allFinite()) {
            throw DivergenceError("chain diverged at step " + std::to_string(step) +
                                      " (target '" + target.name() + "', chain index " +
                                      std::to_string(chain_index) + ")",
                                  std::vector<double>(x.data(), x.data() + x.size()));
        }
        if (step >= cfg.n_burn) chain.states.row(step - cfg.n_burn) = x;
    }
    return chain;
}

Chain generate_chain(const Target& target, const SamplerConfig& cfg, ChainRole role,
                     std::uint64_t chain_index) {
    return generate_chain(target, cfg, Eigen::VectorXd::Zero(target.dim()), role, chain_index);
}

std::vector<Chain> generate_test_chains(const Target& target, const SamplerConfig& cfg,
                                        const Eigen::Ref<const Eigen::VectorXd>& x0) {
    cfg.validate();
    const auto n_chains = static_cast<std::size_t>(cfg.n_test_chains);
    std::vector<Chain> chains(n_chains);

    const unsigned n_workers =
        std::min<unsigned>(std::max(1u, std::thread::hardware_concurrency()),
                           static_cast<unsigned>(n_chains));
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::exception_ptr error;
    std::mutex error_mutex;

    auto worker = [&]() {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= n_chains || failed.load()) return;
            try {
                chains[i] = generate_chain(target, cfg, x0, ChainRole::Test,
                                           static_cast<std::uint64_t>(i));
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!error) error = std::current_exception();
                failed.store(true);
                return;
            }
        }
    };

    if (n_workers <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(n_workers);
        for (unsigned w = 0; w < n_workers; ++w) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    if (error) std::rethrow_exception(error);
    return chains;
}

std::vector<Chain> generate_test_chains(const Target& target, const SamplerConfig& cfg) {
    return generate_test_chains(target, cfg, Eigen::VectorXd::Zero(target.dim()));
}

namespace {

constexpr char kMagic[4] = {'S', 'T', 'C', 'V'};
constexpr std::uint32_t kVersion = 1;

}  // namespace

void save_chain(const Chain& chain, const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IngestionError("cannot open '" + path + "' for writing");
    const auto n = static_cast<std::uint64_t>(chain.states.rows());
    const auto d = static_cast<std::uint64_t>(chain.states.cols());
    out.write(kMagic, 4);
    out.write(reinterpret_cast<const char*>(&kVersion), sizeof(kVersion));
    out.write(reinterpret_cast<const char*>(&n), sizeof(n));
    out.write(reinterpret_cast<const char*>(&d), sizeof(d));
    // Row-major payload; the in-memory matrix is column-major, so emit row by row.
    std::vector<double> row(d);
    for (std::uint64_t i = 0; i < n; ++i) {
        for (std::uint64_t j = 0; j < d; ++j) {
            row[j] = chain.states(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
        }
        out.write(reinterpret_cast<const char*>(row.data()),
                  static_cast<std::streamsize>(d * sizeof(double)));
    }
    if (!out) throw IngestionError("failed writing chain file '" + path + "'");
}

Chain load_chain(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IngestionError("cannot open chain file '" + path + "'");
    char magic[4];
    std::uint32_t version = 0;
    std::uint64_t n = 0;
    std::uint64_t d = 0;
    in.read(magic, 4);
    in.read(reinterpret_cast<char*>(&version), sizeof(version));
    in.read(reinterpret_cast<char*>(&n), sizeof(n));
    in.read(reinterpret_cast<char*>(&d), sizeof(d));
    if (!in || std::memcmp(magic, kMagic, 4) != 0) {
        throw IngestionError("'" + path + "' is not a chain file (bad magic)");
    }
    if (version != kVersion) {
        throw IngestionError("chain file '" + path + "' has unsupported version " +
                             std::to_string(version));
    }
    if (n == 0 || d == 0) throw IngestionError("chain file '" + path + "' has empty shape");
    Chain chain;
    chain.states.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
    std::vector<double> row(d);
    for (std::uint64_t i = 0; i < n; ++i) {
        in.read(reinterpret_cast<char*>(row.data()),
                static_cast<std::streamsize>(d * sizeof(double)));
        if (!in) throw IngestionError("chain file '" + path + "' is truncated");
        for (std::uint64_t j = 0; j < d; ++j) {
            chain.states(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = row[j];
        }
    }
    return chain;
}

}  // namespace steincv
