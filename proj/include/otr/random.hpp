#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <random>
#include <vector>

namespace otr::rng {

using Engine = std::mt19937_64;

// Independent, reproducible stream for a (seed, key...) tuple. Parallel
// workers derive their engine from the logical work id, never from the
// worker id, so scheduling order cannot change results.
inline Engine stream(std::uint64_t seed, std::initializer_list<std::uint64_t> keys = {}) {
    std::vector<std::uint32_t> words;
    words.reserve(2 + 2 * keys.size());
    auto push = [&words](std::uint64_t v) {
        words.push_back(static_cast<std::uint32_t>(v & 0xffffffffu));
        words.push_back(static_cast<std::uint32_t>(v >> 32));
    };
    push(seed);
    for (auto k : keys) push(k);
    std::seed_seq seq(words.begin(), words.end());
    return Engine(seq);
}

inline double uniform01(Engine& eng) {
    // 53 random bits, open at 0 excluded by the +0.5 offset.
    return (static_cast<double>(eng() >> 11) + 0.5) * 0x1.0p-53;
}

inline double normal(Engine& eng) {
    // Marsaglia polar method, implemented here so draws do not depend on the
    // standard library vendor.
    for (;;) {
        const double u = 2.0 * uniform01(eng) - 1.0;
        const double v = 2.0 * uniform01(eng) - 1.0;
        const double s = u * u + v * v;
        if (s > 0.0 && s < 1.0) {
            return u * std::sqrt(-2.0 * std::log(s) / s);
        }
    }
}

// Standard normal truncated to (lower, +inf). Naive rejection when the
// bound is in the bulk, Robert's (1995) exponential proposal in the tail.
inline double truncated_normal_above(Engine& eng, double lower) {
    if (lower < 0.25) {
        for (;;) {
            const double z = normal(eng);
            if (z > lower) return z;
        }
    }
    const double rate = 0.5 * (lower + std::sqrt(lower * lower + 4.0));
    for (;;) {
        const double z = lower - std::log(uniform01(eng)) / rate;
        const double accept = std::exp(-0.5 * (z - rate) * (z - rate));
        if (uniform01(eng) <= accept) return z;
    }
}

// Draw from N(mean, 1) restricted to z > 0 (positive = true) or z <= 0.
inline double truncated_normal_sign(Engine& eng, double mean, bool positive) {
    if (positive) {
        return mean + truncated_normal_above(eng, -mean);
    }
    return mean - truncated_normal_above(eng, mean);
}

}  // namespace otr::rng
