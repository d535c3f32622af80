#pragma once

#include <cstdint>
#include <random>

namespace afarch {

using Rng = std::mt19937_64;

// splitmix64 finalizer; used to derive independent child seeds.
inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
    return mix64(mix64(base) ^ (stream * 0xd6e8feb86659fd93ULL + 1));
}

inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b) {
    return derive_seed(derive_seed(base, a), b);
}

// Named streams so that seeds derived for different purposes never collide.
enum class SeedStream : std::uint64_t {
    split = 1,
    init = 2,
    train = 3,
    eval = 4,
    sampler = 5,
    trial = 6,
    method = 7,
    replicate = 8,
};

inline std::uint64_t derive_seed(std::uint64_t base, SeedStream stream) {
    return derive_seed(base, static_cast<std::uint64_t>(stream));
}

template <typename Scalar = double>
Scalar uniform01(Rng& rng) {
    return std::uniform_real_distribution<Scalar>(Scalar(0), Scalar(1))(rng);
}

}  // namespace afarch
