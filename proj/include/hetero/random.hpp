#pragma once

#include "hetero/core.hpp"

#include <algorithm>
#include <random>

namespace hetero {

inline int uniform_int(Rng& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

inline std::size_t uniform_index(Rng& rng, std::size_t n) {
    return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

inline double uniform_real(Rng& rng, double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline bool coin(Rng& rng, double p) { return uniform_real(rng, 0.0, 1.0) < p; }

/// Child generator seeded from a parent stream; keeps islands independent and reproducible.
inline Rng fork(Rng& parent) {
    std::seed_seq seq{parent(), parent(), parent(), parent()};
    return Rng(seq);
}

}  // namespace hetero
