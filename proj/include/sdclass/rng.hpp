// rng.hpp: seedable 64-bit generators with independent per-item streams

#pragma once

#include <cstdint>
#include <random>

namespace sdclass {

using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Stream identifiers. Values are part of the reproducibility contract; do not renumber.
enum class Stream : std::uint64_t {
    Train = 1,
    Valid = 2,
    Test = 3,
    NoiseTrain = 11,
    NoiseValid = 12,
    NoiseTest = 13,
    NoiseSeed = 20,
    ModelInit = 30,
};

inline std::uint64_t stream_seed(std::uint64_t seed, Stream stream, std::uint64_t index) noexcept {
    std::uint64_t h = splitmix64(seed);
    h = splitmix64(h ^ static_cast<std::uint64_t>(stream));
    return splitmix64(h ^ index);
}

// Generator for item `index` of `stream`; independent of how many other items were drawn.
inline Rng make_stream(std::uint64_t seed, Stream stream, std::uint64_t index) {
    return Rng(stream_seed(seed, stream, index));
}

} // namespace sdclass
