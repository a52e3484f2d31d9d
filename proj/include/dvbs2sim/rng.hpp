#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace dvbs2sim {

using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

/// Folds a list of integer tags into one seed; order matters.
inline std::uint64_t derive_seed(std::initializer_list<std::uint64_t> tags)
{
    std::uint64_t h = 0x6A09E667F3BCC909ULL;
    for (auto t : tags)
        h = splitmix64(h ^ splitmix64(t));
    return h;
}

} // namespace dvbs2sim
