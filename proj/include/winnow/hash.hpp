#pragma once

#include <cstdint>
#include <string_view>

namespace winnow {

// splitmix64 finalizer. Bijective on 64-bit words, good avalanche; the
// whole hash family used for minhashing is derived from this one mixer.
constexpr uint64_t mix64(uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

constexpr uint64_t kGolden64 = 0x9e3779b97f4a7c15ull;

// Counter-based hash: independent-looking stream indexed by (seed, i).
constexpr uint64_t hash_at(uint64_t seed, uint64_t i) {
    return mix64(seed + (i + 1) * kGolden64);
}

// FNV-1a over bytes.
constexpr uint64_t fnv1a(std::string_view s, uint64_t h = 0xcbf29ce484222325ull) {
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

constexpr uint64_t fnv1a_u64(uint64_t v, uint64_t h = 0xcbf29ce484222325ull) {
    for (int i = 0; i < 8; ++i) {
        h ^= (v >> (8 * i)) & 0xff;
        h *= 0x100000001b3ull;
    }
    return h;
}

} // namespace winnow
