#pragma once

// Counter-based random number generation (Philox4x32-10, Salmon et al. 2011).
// Every variate is a pure function of (key, counter), so parallel consumers
// can draw from disjoint counters without sharing state.

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace dyadic::rng {

namespace detail {

inline void mul_hi_lo(std::uint32_t a, std::uint32_t b,
                      std::uint32_t& lo, std::uint32_t& hi) {
    const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
    lo = static_cast<std::uint32_t>(p);
    hi = static_cast<std::uint32_t>(p >> 32);
}

} // namespace detail

/// One 128-bit Philox4x32-10 block.
inline std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr,
                                               std::array<std::uint32_t, 2> key) {
    constexpr std::uint32_t m0 = 0xD2511F53u, m1 = 0xCD9E8D57u;
    constexpr std::uint32_t w0 = 0x9E3779B9u, w1 = 0xBB67AE85u;
    for (int round = 0; round < 10; ++round) {
        std::uint32_t lo0, hi0, lo1, hi1;
        detail::mul_hi_lo(m0, ctr[0], lo0, hi0);
        detail::mul_hi_lo(m1, ctr[2], lo1, hi1);
        ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
        key[0] += w0;
        key[1] += w1;
    }
    return ctr;
}

inline std::array<std::uint32_t, 2> split_key(std::uint64_t seed, std::uint32_t domain) {
    return {static_cast<std::uint32_t>(seed),
            static_cast<std::uint32_t>(seed >> 32) ^ domain};
}

/// Map a 64-bit word to the open interval (0,1).
inline double u01_open(std::uint64_t x) {
    return (static_cast<double>(x >> 11) + 0.5) * 0x1.0p-53;
}

/// Two 64-bit words from one block.
inline std::pair<std::uint64_t, std::uint64_t>
words(std::uint64_t seed, std::uint32_t domain, std::array<std::uint32_t, 4> ctr) {
    const auto out = philox4x32(ctr, split_key(seed, domain));
    return {(static_cast<std::uint64_t>(out[0]) << 32) | out[1],
            (static_cast<std::uint64_t>(out[2]) << 32) | out[3]};
}

/// Standard normal variate for the given counter (Box-Muller, cosine branch).
inline double gaussian(std::uint64_t seed, std::uint32_t domain,
                       std::array<std::uint32_t, 4> ctr) {
    const auto [a, b] = words(seed, domain, ctr);
    const double r = std::sqrt(-2.0 * std::log(u01_open(a)));
    return r * std::cos(2.0 * std::numbers::pi * u01_open(b));
}

/// Sequential uniform stream over a (seed, stream) pair; used where the number
/// of draws per work unit is not known in advance (jump chains).
class UniformStream {
public:
    UniformStream(std::uint64_t seed, std::uint32_t domain, std::uint64_t stream)
        : seed_(seed), domain_(domain),
          lo_(static_cast<std::uint32_t>(stream)),
          hi_(static_cast<std::uint32_t>(stream >> 32)) {}

    /// Next uniform in (0,1).
    double next() {
        if (have_spare_) {
            have_spare_ = false;
            return u01_open(spare_);
        }
        const auto [a, b] = words(seed_, domain_, {lo_, hi_, index_++, 0});
        spare_ = b;
        have_spare_ = true;
        return u01_open(a);
    }

    /// Exponential variate with the given rate (> 0).
    double exponential(double rate) { return -std::log(next()) / rate; }

private:
    std::uint64_t seed_;
    std::uint32_t domain_;
    std::uint32_t lo_, hi_;
    std::uint32_t index_ = 0;
    std::uint64_t spare_ = 0;
    bool have_spare_ = false;
};

// Domain tags keep independent uses of the same seed on disjoint streams.
inline constexpr std::uint32_t domain_sde_noise = 0x5DE00001u;
inline constexpr std::uint32_t domain_jump_chain = 0xC7AC0002u;
inline constexpr std::uint32_t domain_initial_state = 0x1A170003u;

} // namespace dyadic::rng
