#pragma once

#include <cstdint>
#include <random>

namespace catts {

/// SplitMix64 finalizer.
[[nodiscard]] std::uint64_t mix64(std::uint64_t x) noexcept;

/**
 * @brief Per-replicate seed derived from a master seed.
 *
 * derive_seed(master, i) = mix64(master + 0x9E3779B97F4A7C15 * (i + 1)).
 * Replicate i always gets the same stream regardless of how replicates are
 * scheduled, so serial and parallel runs agree.
 */
[[nodiscard]] std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) noexcept;

/// Seeded generator owned by exactly one caller.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(mix64(seed)) {}

    /// Uniform in [0, 1) built from the top 53 bits of one engine output.
    double uniform() noexcept { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double normal() { return normal_(engine_); }

    std::uint64_t next_u64() noexcept { return engine_(); }

    std::mt19937_64& engine() noexcept { return engine_; }

private:
    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace catts
