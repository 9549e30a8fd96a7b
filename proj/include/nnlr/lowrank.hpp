#pragma once

#include <cstdint>
#include <vector>

#include "nnlr/matcore.hpp"

namespace nnlr {

struct SVDTriple {
  DenseMatrix u;  ///< m x r, orthonormal columns
  Vector s;       ///< r singular values, nonincreasing
  DenseMatrix v;  ///< n x r, orthonormal columns

  DenseMatrix reconstruct() const;
};

/// Leading r singular triplets; U diag(S) V^T is a best rank-r approximation
/// in the Frobenius norm.
SVDTriple truncated_svd(const DenseMatrix& m, Index r);

struct NMFResult {
  DenseMatrix w;  ///< m x r, >= 0
  DenseMatrix h;  ///< r x n, >= 0
  double relative_error = 0.0;
  int iterations = 0;
  /// Relative error after each sweep, starting with the initial guess.
  std::vector<double> error_history;
};

/// Nonnegative rank-r factorization M ~ W H by hierarchical alternating
/// least squares (exact column-wise nonnegative updates).
NMFResult nmf(const DenseMatrix& m, Index r, int iters = 500, std::uint64_t seed = 0);

/// min over real alpha of ||alpha X - X*||_F / ||X*||_F.
double best_scaled_error(const DenseMatrix& x, const DenseMatrix& xstar);

}  // namespace nnlr
