#include "nnlr/lowrank.hpp"

#include <Eigen/SVD>

#include <cmath>

#include "nnlr/markovgrid.hpp"

namespace nnlr {

DenseMatrix SVDTriple::reconstruct() const {
  return DenseMatrix(Matrix(u.values() * s.asDiagonal() * v.values().transpose()));
}

SVDTriple truncated_svd(const DenseMatrix& m, Index r) {
  if (r < 1 || r > std::min(m.rows(), m.cols())) {
    throw DomainError("truncated_svd: rank must lie in [1, min(m, n)]");
  }
  Eigen::JacobiSVD<Matrix> svd(m.values(), Eigen::ComputeThinU | Eigen::ComputeThinV);
  return {DenseMatrix(Matrix(svd.matrixU().leftCols(r))), svd.singularValues().head(r),
          DenseMatrix(Matrix(svd.matrixV().leftCols(r)))};
}

namespace {

double relative_residual(const Matrix& m, const Matrix& w, const Matrix& h, double m_norm) {
  return (m - w * h).norm() / m_norm;
}

}  // namespace

NMFResult nmf(const DenseMatrix& m, Index r, int iters, std::uint64_t seed) {
  if (!m.nonnegative()) throw DomainError("nmf: input must be nonnegative");
  if (r < 1) throw DomainError("nmf: rank must be positive");
  const Matrix& a = m.values();
  const Index rows = a.rows();
  const Index cols = a.cols();
  const double a_norm = a.norm();
  if (a_norm == 0.0) {
    return {DenseMatrix(rows, r), DenseMatrix(r, cols), 0.0, 0, {0.0}};
  }

  Rng rng(seed);
  Matrix w(rows, r);
  Matrix h(r, cols);
  for (Index j = 0; j < r; ++j)
    for (Index i = 0; i < rows; ++i) w(i, j) = rng.uniform();
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < r; ++i) h(i, j) = rng.uniform();
  const double scale = std::sqrt(a_norm / (w * h).norm());
  w *= scale;
  h *= scale;

  NMFResult result{DenseMatrix(rows, r), DenseMatrix(r, cols), 0.0, 0, {}};
  result.error_history.push_back(relative_residual(a, w, h, a_norm));

  for (int it = 0; it < iters; ++it) {
    // W columns: minimize ||A - W H|| over W(:, k) >= 0 with the rest fixed.
    {
      const Matrix aht = a * h.transpose();
      const Matrix hht = h * h.transpose();
      for (Index k = 0; k < r; ++k) {
        if (hht(k, k) <= 0.0) continue;
        Vector col = w.col(k) + (aht.col(k) - w * hht.col(k)) / hht(k, k);
        w.col(k) = col.cwiseMax(0.0);
      }
    }
    {
      const Matrix wta = w.transpose() * a;
      const Matrix wtw = w.transpose() * w;
      for (Index k = 0; k < r; ++k) {
        if (wtw(k, k) <= 0.0) continue;
        Eigen::RowVectorXd row = h.row(k) + (wta.row(k) - wtw.row(k) * h) / wtw(k, k);
        h.row(k) = row.cwiseMax(0.0);
      }
    }
    result.iterations = it + 1;
    result.error_history.push_back(relative_residual(a, w, h, a_norm));
  }
  result.relative_error = result.error_history.back();
  result.w = DenseMatrix(std::move(w));
  result.h = DenseMatrix(std::move(h));
  return result;
}

double best_scaled_error(const DenseMatrix& x, const DenseMatrix& xstar) {
  if (!x.same_shape(xstar)) throw ShapeError("best_scaled_error: shape mismatch");
  const double xx = x.values().squaredNorm();
  if (xx == 0.0) throw DomainError("best_scaled_error: X must be nonzero");
  const double ref = xstar.norm();
  if (ref == 0.0) throw DomainError("best_scaled_error: reference must be nonzero");
  const double alpha = (x.values().array() * xstar.values().array()).sum() / xx;
  return (alpha * x.values() - xstar.values()).norm() / ref;
}

}  // namespace nnlr
