#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <vector>

#include "gldfit/rng.hpp"

namespace gldfit {

/// Two-dimensional Sobol sequence with a seed-keyed digital scramble.
/// Dimension 1 is the van der Corput sequence in base 2; dimension 2 uses the
/// classical direction numbers m_j = (2 m_{j-1}) xor m_{j-1}.  The scramble
/// XORs each coordinate's bits with a per-dimension random mask, which keeps
/// the low-discrepancy structure while decorrelating runs with different
/// seeds.
class ScrambledSobol2D {
public:
    explicit ScrambledSobol2D(std::uint64_t seed) : index_(0), state_{0u, 0u} {
        std::uint64_t s = seed;
        mask_[0] = static_cast<std::uint32_t>(splitmix64(s) >> 32);
        mask_[1] = static_cast<std::uint32_t>(splitmix64(s) >> 32);
        std::uint32_t m = 1;
        for (int j = 0; j < 32; ++j) {
            dir1_[j] = 1u << (31 - j);
            dir2_[j] = m << (31 - j);
            m = (m << 1) ^ m;
        }
    }

    /// Next point in [0,1)^2.
    std::array<double, 2> next() {
        if (index_ > 0) {
            const int bit = std::countr_zero(index_);
            state_[0] ^= dir1_[bit];
            state_[1] ^= dir2_[bit];
        }
        ++index_;
        return {to_unit(state_[0] ^ mask_[0]), to_unit(state_[1] ^ mask_[1])};
    }

private:
    static double to_unit(std::uint32_t v) {
        return static_cast<double>(v) * 0x1.0p-32;
    }

    std::uint64_t index_;
    std::array<std::uint32_t, 2> state_;
    std::array<std::uint32_t, 2> mask_;
    std::array<std::uint32_t, 32> dir1_;
    std::array<std::uint32_t, 32> dir2_;
};

/// n scrambled Sobol points mapped onto [lo1,hi1] x [lo2,hi2].
inline std::vector<std::array<double, 2>> sobol_points_2d(std::size_t n, std::uint64_t seed,
                                                          double lo1, double hi1, double lo2,
                                                          double hi2) {
    ScrambledSobol2D gen(seed);
    std::vector<std::array<double, 2>> pts;
    pts.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto p = gen.next();
        pts.push_back({lo1 + p[0] * (hi1 - lo1), lo2 + p[1] * (hi2 - lo2)});
    }
    return pts;
}

} // namespace gldfit
