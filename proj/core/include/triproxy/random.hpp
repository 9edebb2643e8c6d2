#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <vector>

namespace triproxy {

using Rng = std::mt19937_64;

/// Uniform on [0, 1) from the top 53 bits; identical on every platform.
inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

/// Flat Dirichlet draw via normalized unit exponentials.
std::vector<double> dirichlet_ones(Rng& rng, std::size_t n);

}  // namespace triproxy
