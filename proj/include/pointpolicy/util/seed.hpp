#pragma once

#include <cstdint>

namespace pointpolicy::util {

/// splitmix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Independent sub-seed for (stream, index) under a base seed.
constexpr std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream, std::uint64_t index = 0) {
    return mix64(mix64(mix64(base) ^ stream) ^ index);
}

// Stream tags keep demo, evaluation, and noise randomness disjoint.
inline constexpr std::uint64_t kDemoSceneStream = 0x64656d6f;  // "demo"
inline constexpr std::uint64_t kDemoNoiseStream = 0x646e6f69;
inline constexpr std::uint64_t kEvalSceneStream = 0x6576616c;  // "eval"
inline constexpr std::uint64_t kEvalNoiseStream = 0x656e6f69;

}  // namespace pointpolicy::util
