#pragma once

#include <cstdint>
#include <random>

namespace sddp {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Stream seed for replication r: master_seed XOR splitmix64(r).  Documented so
// external tooling can reproduce individual replications.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t r) {
    return master ^ splitmix64(r);
}

using Rng = std::mt19937_64;

// One uniform draw in [0, 1).
inline double uniform01(Rng& rng) {
    return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

}  // namespace sddp
