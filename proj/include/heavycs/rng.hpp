// rng.hpp
//
// Counter-based 64-bit generator: draw i of stream (seed, purpose) is
//   splitmix64_finalize(key + (i + 1) * 0x9E3779B97F4A7C15),
//   key = splitmix64_finalize(seed) ^ splitmix64_finalize(purpose + 0xD1B54A32D192ED03).
// The integer sequence is fully specified, so streams reproduce across platforms
// and implementations. Doubles are uniform on [0, 1) from the top 53 bits.
#pragma once

#include <cmath>
#include <cstdint>
#include <limits>

namespace heavycs {

inline constexpr std::uint64_t splitmix64_finalize(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/// Named per-purpose streams, so adding draws for one purpose never shifts another.
enum class RngPurpose : std::uint64_t {
    context = 1,   // greedy action / target agreement per step
    logging = 2,   // action sampled by the logging policy
    reward = 3,    // Bernoulli reward draw
    weight = 4,    // heavy-tailed importance weight
    target = 5,    // target policy's alternative action
    test = 99,
};

class CounterRng {
public:
    using result_type = std::uint64_t;

    CounterRng(std::uint64_t seed, std::uint64_t purpose)
        : key_(splitmix64_finalize(seed) ^ splitmix64_finalize(purpose + 0xD1B54A32D192ED03ULL)) {}
    CounterRng(std::uint64_t seed, RngPurpose purpose) : CounterRng(seed, static_cast<std::uint64_t>(purpose)) {}

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    result_type operator()() {
        ++counter_;
        return splitmix64_finalize(key_ + counter_ * 0x9E3779B97F4A7C15ULL);
    }

    /// Uniform on [0, 1) with 53 random mantissa bits.
    double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

    /// Uniform integer in [0, n) as floor(uniform() * n).
    std::uint64_t below(std::uint64_t n) {
        const auto v = static_cast<std::uint64_t>(uniform() * static_cast<double>(n));
        return v < n ? v : n - 1;
    }

    bool bernoulli(double p) { return uniform() < p; }

    /// Pareto with minimum `scale` and tail index `shape`: scale (1 - U)^{-1/shape}.
    double pareto(double scale, double shape) { return scale * std::pow(1.0 - uniform(), -1.0 / shape); }

    std::uint64_t counter() const { return counter_; }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

}  // namespace heavycs
