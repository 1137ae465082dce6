#pragma once

// Deterministic, splittable random streams: xoshiro256++ (256-bit state)
// seeded via splitmix64 from hash(seed, realization index, role). Gaussian
// draws use Box-Muller on explicitly constructed uniforms so that traces are
// bit-identical across platforms and thread counts; std::normal_distribution
// is implementation-defined and would break that guarantee.

#include <cmath>
#include <cstdint>

namespace cdd {

// Noise-role tags entering the stream hash (see noise.hpp users).
enum class StreamRole : std::uint64_t { delta = 0, eps1 = 1, eps_ind = 2, misc = 3 };

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t& x) {
    x += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = x;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

inline std::uint64_t rotl(std::uint64_t v, int k) { return (v << k) | (v >> (64 - k)); }

}  // namespace detail

class RngStream {
  public:
    RngStream() : RngStream(0, 0, StreamRole::misc) {}

    RngStream(std::uint64_t seed, std::uint64_t realization, StreamRole role) {
        // Chain the identifying triple through splitmix64 to decorrelate
        // nearby (seed, realization, role) tuples, then fill the state.
        std::uint64_t x = seed;
        (void)detail::splitmix64(x);
        x ^= 0xA0761D6478BD642FULL ^ (realization * 0xE7037ED1A0B428DBULL);
        (void)detail::splitmix64(x);
        x ^= (static_cast<std::uint64_t>(role) + 1) * 0x8EBC6AF09C88C6E3ULL;
        for (auto& w : s_) w = detail::splitmix64(x);
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = detail::rotl(s_[0] + s_[3], 23) + s_[0];
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = detail::rotl(s_[3], 45);
        return result;
    }

    // Uniform on (0,1): 53-bit mantissa, never exactly 0 (log-safe).
    double next_uniform() {
        const double u = static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
        return u > 0.0 ? u : 0x1.0p-53;
    }

    // Standard normal via Box-Muller; caches the second member of each pair.
    double next_gaussian() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double u1 = next_uniform();
        const double u2 = next_uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

  private:
    std::uint64_t s_[4]{};
    double spare_ = 0.0;
    bool have_spare_ = false;
};

}  // namespace cdd
