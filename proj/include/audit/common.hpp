#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <string_view>

namespace audit {

// FNV-1a, used for stable sub-seed derivation and config hashing.
inline uint64_t fnv1a(std::string_view data, uint64_t seed = 14695981039346656037ULL) {
    uint64_t h = seed;
    for (unsigned char c : data) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

inline std::string hex64(uint64_t v) {
    static const char* digits = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[i] = digits[v & 0xF];
        v >>= 4;
    }
    return out;
}

// Deterministic labeled sub-seed: all module randomness hangs off one
// config seed via named derivations.
inline uint64_t derive_seed(uint64_t base, std::string_view label) {
    return fnv1a(label, base ^ 0x9E3779B97F4A7C15ULL);
}

inline std::mt19937_64 make_rng(uint64_t seed) { return std::mt19937_64(seed); }

}  // namespace audit
