#include "nnlr/matcore.hpp"

#include <cmath>
#include <string>

namespace nnlr {

namespace {

void require_same_shape(const DenseMatrix& a, const DenseMatrix& b, const char* what) {
  if (!a.same_shape(b)) {
    throw ShapeError(std::string(what) + ": shape mismatch (" + std::to_string(a.rows()) + "x" +
                     std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" +
                     std::to_string(b.cols()) + ")");
  }
}

void require_nonnegative(const DenseMatrix& w, const char* what) {
  if (!w.nonnegative()) {
    throw DomainError(std::string(what) + ": reference matrix has a negative entry");
  }
}

}  // namespace

DenseMatrix::DenseMatrix(Index rows, Index cols) {
  if (rows < 1 || cols < 1) {
    throw ShapeError("DenseMatrix needs at least one row and one column");
  }
  values_ = Matrix::Zero(rows, cols);
}

DenseMatrix::DenseMatrix(Matrix values) : values_(std::move(values)) {
  if (values_.rows() < 1 || values_.cols() < 1) {
    throw ShapeError("DenseMatrix needs at least one row and one column");
  }
  if (!values_.allFinite()) {
    throw DomainError("DenseMatrix entries must be finite");
  }
}

DenseMatrix::DenseMatrix(std::initializer_list<std::initializer_list<double>> rows) {
  const auto nrows = static_cast<Index>(rows.size());
  const auto ncols = nrows > 0 ? static_cast<Index>(rows.begin()->size()) : 0;
  if (nrows < 1 || ncols < 1) {
    throw ShapeError("DenseMatrix needs at least one row and one column");
  }
  values_.resize(nrows, ncols);
  Index i = 0;
  for (const auto& row : rows) {
    if (static_cast<Index>(row.size()) != ncols) {
      throw ShapeError("DenseMatrix rows must have equal length");
    }
    Index j = 0;
    for (double x : row) values_(i, j++) = x;
    ++i;
  }
  if (!values_.allFinite()) {
    throw DomainError("DenseMatrix entries must be finite");
  }
}

DenseMatrix DenseMatrix::identity(Index n) { return DenseMatrix(Matrix::Identity(n, n)); }

DenseMatrix DenseMatrix::constant(Index rows, Index cols, double value) {
  return DenseMatrix(Matrix::Constant(rows, cols, value));
}

FactorPair::FactorPair(DenseMatrix u, DenseMatrix v) : u_(std::move(u)), v_(std::move(v)) {
  if (u_.cols() != v_.cols()) {
    throw ShapeError("FactorPair: U and V must have the same number of columns");
  }
  if (u_.cols() > std::min(u_.rows(), v_.rows())) {
    throw ShapeError("FactorPair: rank exceeds min(m, n)");
  }
  if (!u_.nonnegative() || !v_.nonnegative()) {
    throw DomainError("FactorPair: factors must be elementwise nonnegative");
  }
}

DenseMatrix FactorPair::product() const {
  return DenseMatrix(Matrix(u_.values() * v_.values().transpose()));
}

ZeroPattern::ZeroPattern(const DenseMatrix& host) {
  require_nonnegative(host, "ZeroPattern");
  mask_ = host.values().array() == 0.0;
  count_ = static_cast<std::size_t>(mask_.count());
}

std::vector<std::pair<Index, Index>> ZeroPattern::positions() const {
  std::vector<std::pair<Index, Index>> out;
  out.reserve(count_);
  for (Index j = 0; j < mask_.cols(); ++j) {
    for (Index i = 0; i < mask_.rows(); ++i) {
      if (mask_(i, j)) out.emplace_back(i, j);
    }
  }
  return out;
}

double frobenius_inner(const DenseMatrix& a, const DenseMatrix& b) {
  require_same_shape(a, b, "frobenius_inner");
  return (a.values().array() * b.values().array()).sum();
}

DenseMatrix project_zero_pattern(const DenseMatrix& w, const DenseMatrix& z) {
  require_same_shape(w, z, "project_zero_pattern");
  require_nonnegative(w, "project_zero_pattern");
  return DenseMatrix(Matrix((w.values().array() == 0.0).select(z.values(), 0.0)));
}

DenseMatrix project_feasible_direction(const DenseMatrix& w, const DenseMatrix& z) {
  require_same_shape(w, z, "project_feasible_direction");
  require_nonnegative(w, "project_feasible_direction");
  return DenseMatrix(kernels::feasible_direction(w.values(), z.values()));
}

std::optional<Vector> lemma_minimizer(const Vector& a, const std::vector<Index>& omega) {
  Vector projected = a;
  for (Index i : omega) {
    if (i < 0 || i >= a.size()) {
      throw ShapeError("lemma_minimizer: index " + std::to_string(i) + " outside vector of size " +
                       std::to_string(a.size()));
    }
    projected(i) = 0.0;
  }
  const double denom = a.dot(projected);
  if (!(denom > 0.0)) return std::nullopt;
  return Vector(projected / denom);
}

ThinQR thin_qr(const DenseMatrix& m) {
  if (m.rows() < m.cols()) {
    throw ShapeError("thin_qr: needs rows >= cols");
  }
  auto [q, r] = kernels::householder_qr(m.values());
  return {DenseMatrix(std::move(q)), DenseMatrix(std::move(r))};
}

namespace kernels {

Matrix feasible_direction(const Matrix& w, const Matrix& z) {
  return (w.array() > 0.0).select(z, z.cwiseMax(0.0));
}

std::pair<Matrix, Matrix> householder_qr(const Matrix& m) {
  const Index rows = m.rows();
  const Index cols = m.cols();
  Matrix work = m;
  // Householder vectors stored column by column; a zero column means H_k = I.
  Matrix reflectors = Matrix::Zero(rows, cols);

  for (Index k = 0; k < cols; ++k) {
    auto x = work.col(k).tail(rows - k);
    const double alpha_norm = x.norm();
    if (alpha_norm == 0.0) continue;
    const double alpha = x(0) >= 0.0 ? -alpha_norm : alpha_norm;
    Vector v = x;
    v(0) -= alpha;
    const double vnorm = v.norm();
    if (vnorm == 0.0) continue;
    v /= vnorm;
    reflectors.col(k).tail(rows - k) = v;
    auto block = work.bottomRightCorner(rows - k, cols - k);
    block.noalias() -= 2.0 * v * (v.transpose() * block);
  }

  Matrix r = work.topRows(cols).triangularView<Eigen::Upper>();
  Matrix q = Matrix::Identity(rows, cols);
  for (Index k = cols - 1; k >= 0; --k) {
    auto v = reflectors.col(k).tail(rows - k);
    if (v.squaredNorm() == 0.0) continue;
    auto block = q.bottomRows(rows - k);
    block.noalias() -= 2.0 * v * (v.transpose() * block);
  }

  for (Index k = 0; k < cols; ++k) {
    if (r(k, k) < 0.0) {
      r.row(k) *= -1.0;
      q.col(k) *= -1.0;
    }
  }
  return {std::move(q), std::move(r)};
}

std::size_t count_negative(const Matrix& x) {
  return static_cast<std::size_t>((x.array() < 0.0).count());
}

}  // namespace kernels

}  // namespace nnlr
