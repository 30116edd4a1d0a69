#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace capbound {

inline std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

inline std::uint64_t fnv1a(std::string_view text)
{
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001B3ULL;
    }
    return h;
}

/// Seed of an independent stream for (seed, purpose, index).
inline std::uint64_t derive_seed(std::uint64_t seed, std::string_view purpose,
                                 std::uint64_t index = 0)
{
    return splitmix64(splitmix64(seed ^ fnv1a(purpose)) + splitmix64(index + 0x51ED27ULL));
}

/// Deterministic random stream.
///
/// Only the raw mt19937_64 output is used; all derived variates are computed
/// here so that sequences are identical across standard library vendors
/// (the std:: distributions are implementation-defined).
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}
    Rng(std::uint64_t seed, std::string_view purpose, std::uint64_t index = 0)
        : engine_(derive_seed(seed, purpose, index)) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform on [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [0, bound), bound > 0, without modulo bias.
    std::uint64_t below(std::uint64_t bound)
    {
        const std::uint64_t limit = (~std::uint64_t{0}) - (~std::uint64_t{0}) % bound;
        std::uint64_t r;
        do {
            r = engine_();
        } while (r >= limit);
        return r % bound;
    }

    /// Rademacher sign.
    int sign() { return (engine_() >> 63) ? 1 : -1; }

private:
    std::mt19937_64 engine_;
};

} // namespace capbound
