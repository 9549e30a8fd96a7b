#pragma once

// Shared operators and reference data for the test suites.

#include <random>
#include <vector>

#include "nnlr/markovgrid.hpp"
#include "nnlr/operators.hpp"

namespace fixtures {

using nnlr::DenseMatrix;
using nnlr::Index;
using nnlr::Matrix;

/// Walk on a path of three nodes: the middle node splits evenly.
inline DenseMatrix path3() { return DenseMatrix{{0, 1, 0}, {0.5, 0, 0.5}, {0, 1, 0}}; }

/// 3 x 3 grid walk: half the time move along the row, half along the column.
inline nnlr::MarkovGridOperator grid3_walk() {
  const DenseMatrix a = path3();
  const DenseMatrix i3 = DenseMatrix::identity(3);
  return nnlr::MarkovGridOperator({{0.5, a, i3}, {0.5, i3, a}});
}

/// Transition matrix of grid3_walk scaled by 4 (integer entries).
inline Matrix grid3_walk_transition_times4() {
  Matrix p(9, 9);
  p << 0, 2, 0, 2, 0, 0, 0, 0, 0,  //
      1, 0, 1, 0, 2, 0, 0, 0, 0,   //
      0, 2, 0, 0, 0, 2, 0, 0, 0,   //
      1, 0, 0, 0, 2, 0, 1, 0, 0,   //
      0, 1, 0, 1, 0, 1, 0, 1, 0,   //
      0, 0, 1, 0, 2, 0, 0, 0, 1,   //
      0, 0, 0, 2, 0, 0, 0, 2, 0,   //
      0, 0, 0, 0, 2, 0, 1, 0, 1,   //
      0, 0, 0, 0, 0, 2, 0, 2, 0;
  return p;
}

/// Three symmetric-term grid whose stationary matrix has a negative best
/// rank-2 approximation.
inline nnlr::MarkovGridOperator sticky3() {
  const DenseMatrix a1{{0.9, 0.05, 0.05}, {1, 0, 0}, {1, 0, 0}};
  const DenseMatrix a2{{0, 1, 0}, {0.1, 0.8, 0.1}, {0, 1, 0}};
  const DenseMatrix a3{{0, 0, 1}, {0, 0, 1}, {0.075, 0.075, 0.85}};
  const double w = 1.0 / 3.0;
  return nnlr::MarkovGridOperator({{w, a1, a1}, {w, a2, a2}, {w, a3, a3}});
}

/// Published 4-digit values for sticky3.
inline Matrix sticky3_stationary() {
  Matrix x(3, 3);
  x << 0.5936, 0.0277, 0.0253, 0.0277, 0.5585, 0.0310, 0.0253, 0.0310, 0.5753;
  return x;
}

inline Matrix sticky3_best_rank2() {
  Matrix x(3, 3);
  x << 0.5787, 0.1024, -0.0212, 0.1024, 0.1848, 0.2638, -0.0212, 0.2638, 0.4303;
  return x;
}

inline Matrix sticky3_nonnegative_rank2() {
  Matrix x(3, 3);
  x << 0.6967, 0.0774, 0, 0.0774, 0.2693, 0.3406, 0, 0.3406, 0.4450;
  return x;
}

inline Matrix random_matrix(Index m, Index n, std::uint32_t seed, double lo = -1.0,
                            double hi = 1.0) {
  std::mt19937 gen(seed);
  std::uniform_real_distribution<double> dist(lo, hi);
  Matrix x(m, n);
  for (Index j = 0; j < n; ++j)
    for (Index i = 0; i < m; ++i) x(i, j) = dist(gen);
  return x;
}

/// Dense row-stochastic matrix with strictly positive entries.
inline DenseMatrix random_stochastic(Index n, std::uint32_t seed) {
  Matrix x = random_matrix(n, n, seed, 0.05, 1.0);
  for (Index i = 0; i < n; ++i) x.row(i) /= x.row(i).sum();
  return DenseMatrix(std::move(x));
}

/// Random Markov grid with dense positive factors.
inline nnlr::MarkovGridOperator random_grid(Index m, Index n, Index t, std::uint32_t seed) {
  std::mt19937 gen(seed);
  std::vector<double> w(static_cast<std::size_t>(t));
  double total = 0.0;
  for (double& x : w) total += (x = std::uniform_real_distribution<double>(0.1, 1.0)(gen));
  std::vector<nnlr::MarkovTerm> terms;
  for (Index p = 0; p < t; ++p) {
    terms.push_back({w[static_cast<std::size_t>(p)] / total, random_stochastic(m, gen()),
                     random_stochastic(n, gen())});
  }
  return nnlr::MarkovGridOperator(std::move(terms));
}

inline Matrix unit(Matrix x) { return x / x.norm(); }

}  // namespace fixtures
