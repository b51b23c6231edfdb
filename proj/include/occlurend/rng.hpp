// Deterministic random number streams. Every stochastic estimator in the
// renderer is keyed by explicit counters (frame, pixel, iteration, purpose)
// so that a re-run with the same seed reproduces every sample bit for bit.
#pragma once

#include <cstdint>

namespace occlurend {

// PCG32 (O'Neill). Small state, good statistical quality, cheap seeking.
struct Pcg32 {
    uint64_t state = 0x853c49e6748fea9bULL;
    uint64_t inc = 0xda3e39cb94b95bdbULL;

    Pcg32() = default;
    Pcg32(uint64_t seed, uint64_t stream) {
        state = 0u;
        inc = (stream << 1u) | 1u;
        next_u32();
        state += seed;
        next_u32();
    }

    uint32_t next_u32() {
        uint64_t old = state;
        state = old * 6364136223846793005ULL + inc;
        uint32_t xorshifted = static_cast<uint32_t>(((old >> 18u) ^ old) >> 27u);
        uint32_t rot = static_cast<uint32_t>(old >> 59u);
        return (xorshifted >> rot) | (xorshifted << ((~rot + 1u) & 31u));
    }

    // Uniform in [0, 1).
    double next_double() { return next_u32() * (1.0 / 4294967296.0); }
};

// SplitMix64-style avalanche; used to build stream ids from counters.
inline uint64_t hash_u64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline uint64_t hash_combine(uint64_t a, uint64_t b) { return hash_u64(a ^ (b + 0x9e3779b97f4a7c15ULL + (a << 6) + (a >> 2))); }

// Stream for one pixel of one frame at one optimizer iteration.
inline Pcg32 make_pixel_rng(uint64_t seed, uint64_t frame, uint64_t pixel, uint64_t iteration, uint64_t salt) {
    uint64_t s = hash_combine(hash_combine(seed, frame), hash_combine(pixel, iteration));
    return Pcg32(s, hash_combine(s, salt));
}

// Van der Corput radical inverse, base 2, with a per-stream scramble.
inline double radical_inverse_scrambled(uint32_t i, uint32_t scramble) {
    uint32_t v = i;
    v = (v << 16) | (v >> 16);
    v = ((v & 0x00ff00ffu) << 8) | ((v & 0xff00ff00u) >> 8);
    v = ((v & 0x0f0f0f0fu) << 4) | ((v & 0xf0f0f0f0u) >> 4);
    v = ((v & 0x33333333u) << 2) | ((v & 0xccccccccu) >> 2);
    v = ((v & 0x55555555u) << 1) | ((v & 0xaaaaaaaau) >> 1);
    v ^= scramble;
    return v * (1.0 / 4294967296.0);
}

// Van der Corput radical inverse, base 3 (for a second low-discrepancy axis).
inline double radical_inverse_base3(uint32_t i) {
    double f = 1.0, r = 0.0;
    while (i) {
        f /= 3.0;
        r += f * (i % 3);
        i /= 3;
    }
    return r;
}

inline double fract(double x) { return x - static_cast<int>(x); }

// Hammersley point j of n with Cranley-Patterson rotation on the first axis.
// Deterministic in (j, n, scramble); used by the prefilter and LUT bakes.
inline void hammersley2d(uint32_t j, uint32_t n, uint64_t scramble, double* u1, double* u2) {
    double shift = (scramble & 0xffffffffu) * (1.0 / 4294967296.0);
    double a = (j + 0.5) / n + shift;
    *u1 = a - static_cast<int>(a);
    *u2 = radical_inverse_scrambled(j, static_cast<uint32_t>(scramble >> 32));
}

}  // namespace occlurend
