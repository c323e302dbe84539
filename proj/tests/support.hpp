#pragma once

#include <random>

#include "ordinal/core.hpp"

namespace testing_support {

using ordinal::RankedDataset;
using ordinal::RankedExample;
using ordinal::Vector;

inline RankedDataset d0() {
  return RankedDataset({{{0, 0, -1}, 1}, {{0, 1, -1}, 2}, {{1, 1, -1}, 2}, {{1, 0, -1}, 3}}, 3);
}

inline RankedDataset random_dataset(std::mt19937_64& rng, std::size_t n, std::size_t d, int r) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::uniform_int_distribution<int> rank(1, r);
  std::vector<RankedExample> ex;
  for (std::size_t i = 0; i < n; ++i) {
    Vector x(d);
    for (std::size_t j = 0; j + 1 < d; ++j) x[j] = u(rng);
    x[d - 1] = -1.0;
    ex.push_back({x, rank(rng)});
  }
  return RankedDataset(std::move(ex), r);
}

}  // namespace testing_support
