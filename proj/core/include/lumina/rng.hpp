// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <string_view>

namespace lumina {

/// Seeded pseudo-random source with portable helpers.
///
/// The std distributions are implementation-defined, so every draw used by the
/// library goes through the helpers below; a fixed seed then yields identical
/// streams on every standard library.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }

    /// Uniform integer in [0, n). n must be positive.
    std::size_t index(std::size_t n);

    /// Uniform double in [0, 1).
    double uniform();

    bool bernoulli(double p) { return uniform() < p; }

    /// Pick an index with probability proportional to weights[i] (all >= 0, sum > 0).
    template <typename Range>
    std::size_t weighted(const Range& weights) {
        double total = 0.0;
        for (double w : weights) total += w;
        double r = uniform() * total;
        std::size_t i = 0;
        std::size_t last_positive = 0;
        for (double w : weights) {
            if (w > 0.0) {
                last_positive = i;
                if (r < w) return i;
            }
            r -= w;
            ++i;
        }
        return last_positive;
    }

private:
    std::mt19937_64 engine_;
};

std::uint64_t splitmix64(std::uint64_t x);

/// Seed for a named sub-stream ("optimizer", "benchmark", ...) of a run seed.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view stream);
std::uint64_t derive_seed(std::uint64_t seed, std::string_view stream, std::uint64_t index);

/// FNV-1a over bytes; used for content hashes in manifests.
std::uint64_t fnv1a64(std::string_view bytes);

}  // namespace lumina
