#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace droplet {

using Rng = std::mt19937_64;

// splitmix64 finalizer; gives well-spread engine seeds from structured input.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Derives an independent stream seed from (master, tag, index). Every
// stochastic stage of an experiment draws from its own stream so that a
// resumed run replays the exact same randomness regardless of how many
// samples were already completed or how work is split across threads.
inline std::uint64_t derive_seed(std::uint64_t master, std::string_view tag,
                                 std::uint64_t index = 0) {
    std::uint64_t h = splitmix64(master);
    for (unsigned char c : tag) {
        h = splitmix64(h ^ static_cast<std::uint64_t>(c));
    }
    return splitmix64(h ^ splitmix64(index));
}

inline Rng make_rng(std::uint64_t master, std::string_view tag, std::uint64_t index = 0) {
    return Rng(derive_seed(master, tag, index));
}

}  // namespace droplet
