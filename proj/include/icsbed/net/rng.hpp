#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace icsbed {

/// Seeded pseudo-random stream. The mapping from engine output to reals is
/// done by hand so sequences are identical across standard libraries.
class Rng {
public:
    explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }
    std::uint32_t next_u32() { return static_cast<std::uint32_t>(engine_() >> 32); }

    /// Uniform in [0, 1).
    double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /// Uniform in [lo, hi].
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    /// Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n) { return n == 0 ? 0 : engine_() % n; }

private:
    std::mt19937_64 engine_;
};

std::uint64_t splitmix64(std::uint64_t x);

/// Independent sub-stream for one consumer; adding a consumer never perturbs
/// another consumer's sequence.
Rng derive_stream(std::uint64_t scenario_seed, std::string_view consumer);

} // namespace icsbed
