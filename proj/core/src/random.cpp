#include "triproxy/random.hpp"

#include <cmath>

namespace triproxy {

std::vector<double> dirichlet_ones(Rng& rng, std::size_t n) {
  std::vector<double> out(n);
  double total = 0;
  for (auto& x : out) {
    x = -std::log1p(-uniform01(rng));
    total += x;
  }
  for (auto& x : out) x /= total;
  return out;
}

}  // namespace triproxy
