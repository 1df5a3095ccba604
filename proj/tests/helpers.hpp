#pragma once

#include <random>

#include "lrrte/lowrank.hpp"

namespace lrrte::test {

inline DenseMatrix random_matrix(std::mt19937_64& rng, Index m, Index n) {
  std::normal_distribution<double> g(0.0, 1.0);
  DenseMatrix a(m, n);
  for (Index j = 0; j < n; ++j)
    for (Index i = 0; i < m; ++i) a(i, j) = g(rng);
  return a;
}

inline LowRankMatrix random_lowrank(std::mt19937_64& rng, Index m, Index n, Index r) {
  return LowRankMatrix::from_factors(random_matrix(rng, m, r), random_matrix(rng, n, r));
}

inline LowRankMatrix from_dense(const DenseMatrix& a) {
  return LowRankMatrix::from_factors(a, DenseMatrix::Identity(a.cols(), a.cols()));
}

}  // namespace lrrte::test
