#pragma once

#include <cstdint>
#include <vector>

#include "winnow/hash.hpp"

namespace winnow {

// Deterministic project-wide RNG (splitmix64). std::mt19937 would be
// reproducible too, but the std distributions are not specified
// bit-exactly across standard libraries; everything here is.
class Rng {
public:
    explicit Rng(uint64_t seed) : state_(seed) {}

    uint64_t next_u64() {
        state_ += kGolden64;
        return mix64(state_);
    }

    // Uniform in [0, 1) with 53 random bits.
    double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Unbiased uniform in [0, n) by rejection.
    uint64_t next_below(uint64_t n) {
        if (n == 0) return 0;
        const uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        uint64_t v = next_u64();
        while (v >= limit) v = next_u64();
        return v % n;
    }

    template <typename T>
    void shuffle(std::vector<T>& items) {
        for (size_t i = items.size(); i > 1; --i) {
            size_t j = static_cast<size_t>(next_below(i));
            using std::swap;
            swap(items[i - 1], items[j]);
        }
    }

private:
    uint64_t state_;
};

// Random access into the same stream: draw i of a seeded sequence,
// without materializing the draws before it.
inline double indexed_double(uint64_t seed, uint64_t index) {
    return static_cast<double>(hash_at(seed, index) >> 11) * 0x1.0p-53;
}

} // namespace winnow
