#pragma once

#include <cstddef>
#include <cstdint>
#include <random>

namespace memegp {

// Every stochastic routine takes one of these by reference. One seeded
// stream per run keeps results reproducible.
using Rng = std::mt19937_64;

inline auto uniform_real(Rng& rng, double lo, double hi) -> double
{
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline auto uniform_index(Rng& rng, std::size_t n) -> std::size_t
{
    return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

inline auto bernoulli(Rng& rng, double p) -> bool
{
    return uniform_real(rng, 0.0, 1.0) < p;
}

} // namespace memegp
