#pragma once

#include <cstdint>
#include <limits>

namespace treetensor::data {

/// splitmix64 finalizer applied to a (seed, index) pair; used to derive
/// independent per-sample and per-split seeds.
std::uint64_t mix(std::uint64_t seed, std::uint64_t index);

/// PCG32 (XSH-RR 64/32). Satisfies UniformRandomBitGenerator. The full
/// state is two integers, so it can be written to and restored from a checkpoint.
class Pcg32 {
public:
    using result_type = std::uint32_t;

    explicit Pcg32(std::uint64_t seed = 0x853c49e6748fea9bULL, std::uint64_t stream = 0xda3e39cb94b95bdbULL);

    result_type operator()();
    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    /// Uniform integer in [0, bound), unbiased; bound must be positive.
    std::uint32_t below(std::uint32_t bound);
    /// Uniform integer in [lo, hi].
    std::uint32_t between(std::uint32_t lo, std::uint32_t hi) { return lo + below(hi - lo + 1); }
    /// Uniform double in [0, 1) with 53 random bits.
    double uniform();
    bool bernoulli(double p) { return uniform() < p; }

    [[nodiscard]] std::uint64_t state() const { return state_; }
    [[nodiscard]] std::uint64_t increment() const { return inc_; }
    static Pcg32 restore(std::uint64_t state, std::uint64_t increment);

    bool operator==(const Pcg32&) const = default;

private:
    std::uint64_t state_ = 0;
    std::uint64_t inc_ = 1;
};

}  // namespace treetensor::data
