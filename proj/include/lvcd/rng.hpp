#pragma once

#include <cstdint>
#include <random>

namespace lvcd {

// splitmix64 step; used to derive independent streams from (seed, stream id)
// pairs so that parallel workers stay deterministic regardless of scheduling.
inline uint64_t splitmix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline uint64_t mix_seed(uint64_t seed, uint64_t stream) {
    return splitmix64(splitmix64(seed) ^ splitmix64(stream * 0x2545f4914f6cdd1dULL + 1));
}

inline std::mt19937_64 make_rng(uint64_t seed, uint64_t stream = 0) {
    return std::mt19937_64(mix_seed(seed, stream));
}

}  // namespace lvcd
