#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <initializer_list>
#include <optional>
#include <utility>
#include <vector>

#include "nnlr/errors.hpp"

namespace nnlr {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Real m-by-n matrix with at least one row and column and only finite
/// entries. Immutable once constructed; the underlying Eigen storage is
/// exposed read-only through values().
class DenseMatrix {
public:
  /// Zero matrix.
  DenseMatrix(Index rows, Index cols);
  explicit DenseMatrix(Matrix values);
  DenseMatrix(std::initializer_list<std::initializer_list<double>> rows);

  static DenseMatrix identity(Index n);
  static DenseMatrix constant(Index rows, Index cols, double value);

  Index rows() const { return values_.rows(); }
  Index cols() const { return values_.cols(); }
  double operator()(Index i, Index j) const { return values_(i, j); }
  const Matrix& values() const { return values_; }

  double norm() const { return values_.norm(); }
  bool nonnegative() const { return (values_.array() >= 0.0).all(); }
  bool same_shape(const DenseMatrix& other) const {
    return rows() == other.rows() && cols() == other.cols();
  }

private:
  Matrix values_;
};

/// X = U V^T with elementwise nonnegative factors sharing rank r.
class FactorPair {
public:
  FactorPair(DenseMatrix u, DenseMatrix v);

  const DenseMatrix& u() const { return u_; }
  const DenseMatrix& v() const { return v_; }
  Index rank() const { return u_.cols(); }
  Index rows() const { return u_.rows(); }
  Index cols() const { return v_.rows(); }

  /// Forms U V^T explicitly.
  DenseMatrix product() const;

private:
  DenseMatrix u_;
  DenseMatrix v_;
};

/// Positions (i, j) where a nonnegative host matrix is exactly zero.
class ZeroPattern {
public:
  explicit ZeroPattern(const DenseMatrix& host);

  Index rows() const { return mask_.rows(); }
  Index cols() const { return mask_.cols(); }
  bool contains(Index i, Index j) const { return mask_(i, j); }
  std::size_t size() const { return count_; }
  std::vector<std::pair<Index, Index>> positions() const;

private:
  Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> mask_;
  std::size_t count_ = 0;
};

/// Sum of elementwise products.
double frobenius_inner(const DenseMatrix& a, const DenseMatrix& b);

/// Keeps Z on the zero pattern of W and zeroes it elsewhere.
DenseMatrix project_zero_pattern(const DenseMatrix& w, const DenseMatrix& z);

/// Keeps Z on the support of W and clamps it to max(0, Z) on the zero
/// pattern, i.e. the closest direction along which W stays nonnegative.
DenseMatrix project_feasible_direction(const DenseMatrix& w, const DenseMatrix& z);

/// Minimum-norm x with <a, x> = 1 and x_i = 0 for i in omega:
/// x* = P_I(a) / <a, P_I(a)> where I is the complement of omega.
/// Returns nullopt when P_I(a) vanishes (no admissible direction).
std::optional<Vector> lemma_minimizer(const Vector& a, const std::vector<Index>& omega);

struct ThinQR {
  DenseMatrix q;  ///< m x r, orthonormal columns
  DenseMatrix r;  ///< r x r, upper triangular, nonnegative diagonal
};

/// Householder thin QR. Rank-deficient input still yields orthonormal Q.
ThinQR thin_qr(const DenseMatrix& m);

namespace kernels {

// Unchecked Eigen-level versions used inside the solvers' inner loops.

Matrix feasible_direction(const Matrix& w, const Matrix& z);

/// Householder thin QR on raw storage; returns (Q, R) with diag(R) >= 0.
std::pair<Matrix, Matrix> householder_qr(const Matrix& m);

/// Number of strictly negative entries.
std::size_t count_negative(const Matrix& x);

}  // namespace kernels

}  // namespace nnlr
