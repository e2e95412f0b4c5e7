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

#include <cmath>
#include <cstdint>

namespace steincv {

// Stream tags used when deriving independent RNG streams from one master seed.
// Streams are identified by (seed, tag, index); distinct triples give
// statistically independent xoshiro256++ states via SplitMix64 mixing.
inline constexpr std::uint64_t kStreamTrain = 0x745241494e5f4331ULL;
inline constexpr std::uint64_t kStreamTest = 0x7445535400005f43ULL;
inline constexpr std::uint64_t kStreamInit = 0x694e49545f303031ULL;
inline constexpr std::uint64_t kStreamSplit = 0x73504c49545f0001ULL;
inline constexpr std::uint64_t kStreamMinibatch = 0x6d42415443480001ULL;

inline std::uint64_t splitmix64_next(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/// Deterministic 64-bit generator (xoshiro256++) with documented stream
/// derivation. All randomness in the library flows through this type so that
/// results are bit-reproducible across platforms; std::random distributions
/// are avoided on purpose (their output is implementation-defined).
class Rng {
public:
    /// Stream derivation: state <- seed, then two SplitMix64 absorptions of
    /// the stream tag and the stream index, then four SplitMix64 outputs fill
    /// the xoshiro256++ state.
    Rng(std::uint64_t seed, std::uint64_t stream_tag, std::uint64_t stream_index) {
        std::uint64_t sm = seed;
        splitmix64_next(sm);
        sm ^= stream_tag;
        splitmix64_next(sm);
        sm ^= stream_index;
        s_[0] = splitmix64_next(sm);
        s_[1] = splitmix64_next(sm);
        s_[2] = splitmix64_next(sm);
        s_[3] = splitmix64_next(sm);
        if ((s_[0] | s_[1] | s_[2] | s_[3]) == 0) s_[0] = 1;  // all-zero state is invalid
        have_cached_normal_ = false;
        cached_normal_ = 0.0;
    }

    explicit Rng(std::uint64_t seed) : Rng(seed, 0, 0) {}

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    /// Uniform double in [0, 1), 53-bit resolution.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform double in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Standard normal via Box-Muller; the second deviate is cached.
    double normal() {
        if (have_cached_normal_) {
            have_cached_normal_ = false;
            return cached_normal_;
        }
        const double u1 = 1.0 - uniform();  // (0, 1]
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 6.283185307179586476925286766559 * u2;
        cached_normal_ = r * std::sin(theta);
        have_cached_normal_ = true;
        return r * std::cos(theta);
    }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

    std::uint64_t s_[4];
    bool have_cached_normal_;
    double cached_normal_;
};

}  // namespace steincv
