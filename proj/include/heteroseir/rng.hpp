#ifndef HETEROSEIR_RNG_HPP
#define HETEROSEIR_RNG_HPP

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>

namespace heteroseir {

// Replicate streams must be byte-identical across platforms and independent
// of execution order, so the generator and the samplers are fixed here rather
// than delegated to implementation-defined <random> distributions.

inline std::uint64_t splitmix64(std::uint64_t& state) {
    state += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// xoshiro256++ stream, keyed deterministically from (seed, key words).
class RngStream {
  public:
    RngStream() : RngStream(0, 0) {}

    explicit RngStream(std::uint64_t seed, std::uint64_t key0 = 0, std::uint64_t key1 = 0,
                       std::uint64_t key2 = 0) {
        std::uint64_t sm = seed;
        sm ^= 0xd1b54a32d192ed03ULL * (key0 + 1);
        sm ^= 0x8cb92ba72f3d8dd7ULL * (key1 + 1);
        sm ^= 0xaef17502108ef2d9ULL * (key2 + 1);
        for (auto& word : state_) word = splitmix64(sm);
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    /// Uniform double in [0, 1) with 53 random bits.
    double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Standard normal via Box-Muller (two uniforms per draw, no caching).
    double next_normal() {
        double u1 = next_double();
        const double u2 = next_double();
        if (u1 <= 0.0) u1 = 0x1.0p-53;
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
    }

  private:
    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
    std::array<std::uint64_t, 4> state_;
};

namespace detail {

inline long poisson_inversion(double lambda, RngStream& rng) {
    const double u = rng.next_double();
    double p = std::exp(-lambda);
    double cumulative = p;
    long k = 0;
    while (u > cumulative) {
        ++k;
        p *= lambda / static_cast<double>(k);
        cumulative += p;
        if (k > 1000000) throw std::runtime_error("poisson_inversion: failed to terminate");
    }
    return k;
}

// Hoermann's PTRS transformed-rejection sampler, valid for lambda >= 10.
inline long poisson_ptrs(double lambda, RngStream& rng) {
    const double slam = std::sqrt(lambda);
    const double loglam = std::log(lambda);
    const double b = 0.931 + 2.53 * slam;
    const double a = -0.059 + 0.02483 * b;
    const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
    const double v_r = 0.9277 - 3.6224 / (b - 2.0);

    for (;;) {
        const double u = rng.next_double() - 0.5;
        const double v = rng.next_double();
        const double us = 0.5 - std::abs(u);
        const double k = std::floor((2.0 * a / us + b) * u + lambda + 0.43);
        if (us >= 0.07 && v <= v_r) return static_cast<long>(k);
        if (k < 0.0 || (us < 0.013 && v > us)) continue;
        const double rhs = k * loglam - std::lgamma(k + 1.0) - lambda;
        if (std::log(v * inv_alpha / (a / (us * us) + b)) <= rhs) return static_cast<long>(k);
    }
}

}  // namespace detail

/// Poisson draw: inversion by sequential search below lambda = 30, PTRS
/// rejection above. Throws on negative or non-finite lambda.
inline long poisson_draw(double lambda, RngStream& rng) {
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
        throw std::invalid_argument("poisson_draw: lambda must be finite and >= 0");
    }
    if (lambda == 0.0) return 0;
    if (lambda < 30.0) return detail::poisson_inversion(lambda, rng);
    return detail::poisson_ptrs(lambda, rng);
}

}  // namespace heteroseir

#endif  // HETEROSEIR_RNG_HPP
