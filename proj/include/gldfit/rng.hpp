#pragma once

#include <cstdint>
#include <random>

namespace gldfit {

/// SplitMix64 step; used for seed mixing and substream derivation.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/// Deterministic child seed for replicate/task `index` of a master seed.
/// The derivation is part of the output-stability contract: identical master
/// seeds must reproduce identical replicate streams across releases.
inline std::uint64_t substream_seed(std::uint64_t master, std::uint64_t index) {
    std::uint64_t s = master;
    std::uint64_t mixed = splitmix64(s) ^ (0xD1B54A32D192ED03ULL * (index + 1));
    return splitmix64(mixed);
}

/// Seedable uniform stream.  Doubles are produced from the mt19937_64 engine
/// (whose output sequence the standard pins down exactly) by taking the top
/// 53 bits, so identical seeds give identical values on every platform.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    /// Uniform double in [0, 1).
    double uniform() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    /// Uniform double in (0, 1); never returns an exact endpoint.
    double uniform_open() {
        for (;;) {
            const double u = uniform();
            if (u > 0.0) return u;
        }
    }

    bool bernoulli(double p) { return uniform() < p; }

    std::uint64_t next_u64() { return engine_(); }

private:
    std::mt19937_64 engine_;
};

} // namespace gldfit
