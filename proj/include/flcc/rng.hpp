#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace flcc {

// Named sub-stream tags. Every random decision in a run draws from an engine
// derived from (experiment seed, tag, ...indices), so layouts, partitions and
// per-node training streams never depend on execution order or mode.
enum Stream : std::uint64_t {
    kStreamLayout = 1,
    kStreamPartition = 2,
    kStreamInit = 3,
    kStreamTrain = 4,
    kStreamMac = 5,
    kStreamAttack = 6,
    kStreamMonteCarlo = 7,
};

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Engine for a named sub-stream of the experiment seed.
inline std::mt19937_64 make_engine(std::uint64_t seed,
                                   std::initializer_list<std::uint64_t> stream = {}) {
    std::uint64_t h = splitmix64(seed);
    for (std::uint64_t v : stream) h = splitmix64(h ^ v);
    return std::mt19937_64(h);
}

}  // namespace flcc
