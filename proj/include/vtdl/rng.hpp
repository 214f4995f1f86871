#pragma once

#include <cstdint>
#include <random>
#include <string>

namespace vtdl {

/// Seeded generator wrapping std::mt19937_64. The distribution helpers are
/// implemented here rather than via <random> distributions so that a given
/// seed produces the same stream on every standard library implementation.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform double in [0,1), 53-bit resolution.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Unbiased uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n);

    /// Uniform integer in [lo, hi], inclusive.
    std::int64_t range_int(std::int64_t lo, std::int64_t hi) {
        return lo + static_cast<std::int64_t>(below(static_cast<std::uint64_t>(hi - lo) + 1));
    }

    /// Standard normal via Box-Muller; consumes exactly two uniforms per call.
    double normal();

    std::string save_state() const;
    void restore_state(const std::string& state);

private:
    std::mt19937_64 engine_;
};

/// Derives an independent stream seed from a base seed and indices
/// (splitmix64 finalizer over the mixed words).
std::uint64_t mix_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0,
                       std::uint64_t c = 0);

} // namespace vtdl
