#pragma once

// Counter-based random streams.
//
// Every stream is addressed by (seed, pathIndex, component, purpose) and
// produces the same sequence no matter which thread asks for it or in which
// order streams are created. The block function is Philox4x32-10.

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace itolevy {

enum class StreamPurpose : std::uint32_t {
    Brownian = 1,
    JumpTimes = 2,
    Integrand = 3,
    Rotation = 4,
    Permutation = 5,
    Check = 6,
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

inline std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> ctr,
                                                  std::array<std::uint32_t, 2> key)
{
    constexpr std::uint32_t kMul0 = 0xD2511F53U;
    constexpr std::uint32_t kMul1 = 0xCD9E8D57U;
    constexpr std::uint32_t kWeyl0 = 0x9E3779B9U;
    constexpr std::uint32_t kWeyl1 = 0xBB67AE85U;
    for (int round = 0; round < 10; ++round) {
        const std::uint64_t p0 = std::uint64_t{kMul0} * ctr[0];
        const std::uint64_t p1 = std::uint64_t{kMul1} * ctr[2];
        const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
        const auto lo0 = static_cast<std::uint32_t>(p0);
        const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
        const auto lo1 = static_cast<std::uint32_t>(p1);
        ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
        key[0] += kWeyl0;
        key[1] += kWeyl1;
    }
    return ctr;
}

} // namespace detail

class CounterRng {
public:
    CounterRng(std::uint64_t seed, std::uint64_t pathIndex, std::uint32_t component,
               StreamPurpose purpose)
    {
        const std::uint64_t k = detail::splitmix64(seed);
        key_ = {static_cast<std::uint32_t>(k), static_cast<std::uint32_t>(k >> 32)};
        // components are limited to 24 bits so the purpose tag fits beside them
        tag_ = (component & 0x00FFFFFFU) | (static_cast<std::uint32_t>(purpose) << 24);
        path_lo_ = static_cast<std::uint32_t>(pathIndex);
        path_hi_ = static_cast<std::uint32_t>(pathIndex >> 32);
    }

    std::uint32_t next_u32()
    {
        if (used_ == 4) {
            buffer_ = detail::philox4x32_10({block_++, tag_, path_lo_, path_hi_}, key_);
            used_ = 0;
        }
        return buffer_[used_++];
    }

    std::uint64_t next_u64()
    {
        const std::uint64_t hi = next_u32();
        return (hi << 32) | next_u32();
    }

    /// Uniform on [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform on (0, 1); safe to pass to log.
    double open_uniform() { return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53; }

    double normal()
    {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double radius = std::sqrt(-2.0 * std::log(open_uniform()));
        const double angle = 2.0 * std::numbers::pi * uniform();
        spare_ = radius * std::sin(angle);
        has_spare_ = true;
        return radius * std::cos(angle);
    }

    double exponential(double rate) { return -std::log(open_uniform()) / rate; }

    /// Uniform integer in [0, bound).
    std::uint64_t below(std::uint64_t bound) { return next_u64() % bound; }

private:
    std::array<std::uint32_t, 2> key_{};
    std::uint32_t tag_ = 0;
    std::uint32_t path_lo_ = 0;
    std::uint32_t path_hi_ = 0;
    std::uint32_t block_ = 0;
    std::array<std::uint32_t, 4> buffer_{};
    int used_ = 4;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

} // namespace itolevy
