#include "nnlr/operators.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace nnlr {

namespace detail {

namespace {
constexpr double kSparseDensity = 0.3;
}

CoefficientMatrix::CoefficientMatrix(const DenseMatrix& m) : dense_(m) {
  if (m.rows() != m.cols()) throw ShapeError("coefficient matrix must be square");
  const Matrix& v = m.values();
  Index nnz = 0;
  for (Index j = 0; j < v.cols(); ++j) {
    for (Index i = 0; i < v.rows(); ++i) {
      if (v(i, j) != 0.0) {
        ++nnz;
        bandwidth_ = std::max(bandwidth_, std::abs(i - j));
      }
    }
  }
  use_sparse_ = static_cast<double>(nnz) <= kSparseDensity * static_cast<double>(v.size());
  if (use_sparse_) {
    sparse_ = v.sparseView();
    sparse_t_ = sparse_.transpose();
  }
}

Matrix CoefficientMatrix::transpose_times(const Matrix& x) const {
  if (use_sparse_) return sparse_t_ * x;
  return dense_.values().transpose() * x;
}

Matrix CoefficientMatrix::times(const Matrix& x) const {
  if (use_sparse_) return sparse_ * x;
  return dense_.values() * x;
}

Matrix CoefficientMatrix::right_times(const Matrix& x) const {
  if (use_sparse_) return x * sparse_;
  return x * dense_.values();
}

Matrix CoefficientMatrix::right_times_transpose(const Matrix& x) const {
  if (use_sparse_) return x * sparse_t_;
  return x * dense_.values().transpose();
}

}  // namespace detail

namespace {

void require_metzler(const DenseMatrix& a, const char* what) {
  const Matrix& v = a.values();
  for (Index j = 0; j < v.cols(); ++j) {
    for (Index i = 0; i < v.rows(); ++i) {
      if (i != j && v(i, j) < 0.0) {
        throw DomainError(std::string(what) + ": Laplacian has a negative off-diagonal entry");
      }
    }
  }
}

void require_finite(double x, const char* what) {
  if (!std::isfinite(x)) throw DomainError(std::string(what) + " must be finite");
}

}  // namespace

MarkovGridOperator::MarkovGridOperator(std::vector<MarkovTerm> terms) : terms_(std::move(terms)) {
  if (terms_.empty()) throw ShapeError("MarkovGridOperator needs at least one term");
  m_ = terms_.front().a.rows();
  n_ = terms_.front().b.rows();
  a_.reserve(terms_.size());
  b_.reserve(terms_.size());
  for (const auto& term : terms_) {
    require_finite(term.alpha, "term weight");
    if (term.a.rows() != m_ || term.a.cols() != m_ || term.b.rows() != n_ || term.b.cols() != n_) {
      throw ShapeError("MarkovGridOperator: every A must be m x m and every B n x n");
    }
    a_.emplace_back(term.a);
    b_.emplace_back(term.b);
  }
}

Matrix MarkovGridOperator::apply(const Matrix& x) const {
  Matrix out = Matrix::Zero(m_, n_);
  for (std::size_t p = 0; p < terms_.size(); ++p) {
    if (terms_[p].alpha == 0.0) continue;
    out.noalias() += terms_[p].alpha * b_[p].right_times(a_[p].transpose_times(x));
  }
  return out;
}

Matrix MarkovGridOperator::apply_lowrank(const Matrix& left, const Matrix& right) const {
  // A^T (L R^T) B = (A^T L)(B^T R)^T, never forming L R^T first.
  const Index r = left.cols();
  Matrix stacked_left(m_, r * static_cast<Index>(terms_.size()));
  Matrix stacked_right(n_, r * static_cast<Index>(terms_.size()));
  Index col = 0;
  for (std::size_t p = 0; p < terms_.size(); ++p) {
    if (terms_[p].alpha == 0.0) continue;
    stacked_left.middleCols(col, r) = terms_[p].alpha * a_[p].transpose_times(left);
    stacked_right.middleCols(col, r) = b_[p].transpose_times(right);
    col += r;
  }
  return stacked_left.leftCols(col) * stacked_right.leftCols(col).transpose();
}

HadamardGrowthOperator::HadamardGrowthOperator(DenseMatrix laplacian, double eps, double eps_r,
                                               DenseMatrix growth)
    : a_(laplacian), eps_(eps), eps_r_(eps_r), growth_(std::move(growth)) {
  if (!(eps > 0.0)) throw DomainError("diffusion coefficient must be positive");
  require_finite(eps_r, "growth scaling");
  require_metzler(laplacian, "HadamardGrowthOperator");
  if (growth_.rows() != a_.size() || growth_.cols() != a_.size()) {
    throw ShapeError("HadamardGrowthOperator: growth matrix must match the Laplacian size");
  }
}

Matrix HadamardGrowthOperator::apply(const Matrix& x) const {
  Matrix out = eps_ * (a_.times(x) + a_.right_times_transpose(x));
  out.array() += eps_r_ * growth_.values().array() * x.array();
  return out;
}

Matrix HadamardGrowthOperator::apply_lowrank(const Matrix& left, const Matrix& right) const {
  Matrix product = left * right.transpose();
  Matrix out = eps_ * (a_.times(left) * right.transpose() + left * a_.times(right).transpose());
  out.array() += eps_r_ * growth_.values().array() * product.array();
  return out;
}

Matrix HadamardGrowthOperator::growth_diagonal() const { return eps_r_ * growth_.values(); }

SeparableGrowthOperator::SeparableGrowthOperator(DenseMatrix laplacian, double eps, double r0,
                                                 double eps_r, Vector phi, Vector psi)
    : a_(laplacian), eps_(eps), r0_(r0), eps_r_(eps_r), phi_(std::move(phi)), psi_(std::move(psi)) {
  if (!(eps > 0.0)) throw DomainError("diffusion coefficient must be positive");
  require_finite(r0, "baseline growth");
  require_finite(eps_r, "growth scaling");
  require_metzler(laplacian, "SeparableGrowthOperator");
  if (phi_.size() != a_.size() || psi_.size() != a_.size()) {
    throw ShapeError("SeparableGrowthOperator: modulation vectors must match the Laplacian size");
  }
  if (!phi_.allFinite() || !psi_.allFinite()) throw DomainError("modulation vectors must be finite");
}

Matrix SeparableGrowthOperator::apply(const Matrix& x) const {
  Matrix out = eps_ * (a_.times(x) + a_.right_times_transpose(x)) + r0_ * x;
  out.noalias() += eps_r_ * (phi_.asDiagonal() * x * psi_.asDiagonal());
  return out;
}

Matrix SeparableGrowthOperator::apply_lowrank(const Matrix& left, const Matrix& right) const {
  // eps (A L R^T + L (A R)^T) + r0 L R^T + eps_r (Phi L)(Psi R)^T
  const Index r = left.cols();
  Matrix stacked_left(left.rows(), 4 * r);
  Matrix stacked_right(right.rows(), 4 * r);
  stacked_left << eps_ * a_.times(left), eps_ * left, r0_ * left,
      eps_r_ * (phi_.asDiagonal() * left);
  stacked_right << right, a_.times(right), right, psi_.asDiagonal() * right;
  return stacked_left * stacked_right.transpose();
}

Matrix SeparableGrowthOperator::growth_diagonal() const {
  Matrix g = eps_r_ * phi_ * psi_.transpose();
  g.array() += r0_;
  return g;
}

std::string_view to_string(OperatorKind kind) {
  switch (kind) {
    case OperatorKind::kMarkovGrid:
      return "markov_grid";
    case OperatorKind::kHadamardGrowth:
      return "hadamard_growth";
    case OperatorKind::kSeparableGrowth:
      return "separable_growth";
  }
  return "unknown";
}

OperatorHandle::OperatorHandle(MarkovGridOperator op)
    : op_(std::move(op)), nonnegativity_preserving_(true), metzler_(true) {}

// The diffusion diagonal -2 eps / h^2 is negative, so growth-diffusion
// operators are Metzler but only nonnegativity preserving after a shift.
OperatorHandle::OperatorHandle(HadamardGrowthOperator op)
    : op_(std::move(op)), nonnegativity_preserving_(false), metzler_(true) {}

OperatorHandle::OperatorHandle(SeparableGrowthOperator op)
    : op_(std::move(op)), nonnegativity_preserving_(false), metzler_(true) {}

OperatorKind OperatorHandle::kind() const { return static_cast<OperatorKind>(op_.index()); }

Index OperatorHandle::rows() const {
  return std::visit(
      [](const auto& op) -> Index {
        if constexpr (std::is_same_v<std::decay_t<decltype(op)>, MarkovGridOperator>) {
          return op.rows();
        } else {
          return op.size();
        }
      },
      op_);
}

Index OperatorHandle::cols() const {
  return std::visit(
      [](const auto& op) -> Index {
        if constexpr (std::is_same_v<std::decay_t<decltype(op)>, MarkovGridOperator>) {
          return op.cols();
        } else {
          return op.size();
        }
      },
      op_);
}

double OperatorHandle::nonnegative_shift() const {
  return std::visit(
      [](const auto& op) -> double {
        using T = std::decay_t<decltype(op)>;
        if constexpr (std::is_same_v<T, MarkovGridOperator>) {
          return 0.0;
        } else if constexpr (std::is_same_v<T, HadamardGrowthOperator>) {
          return op.eps_r() * op.growth().values().cwiseAbs().maxCoeff() +
                 2.0 * op.eps() * op.laplacian().values().diagonal().cwiseAbs().maxCoeff();
        } else {
          const double growth = (op.phi() * op.psi().transpose()).cwiseAbs().maxCoeff();
          return std::abs(op.eps_r()) * growth +
                 2.0 * op.eps() * op.laplacian().values().diagonal().cwiseAbs().maxCoeff() +
                 std::abs(op.r0());
        }
      },
      op_);
}

Matrix OperatorHandle::apply(const Matrix& x) const {
  return std::visit([&](const auto& op) { return op.apply(x); }, op_);
}

Matrix OperatorHandle::apply_lowrank(const Matrix& left, const Matrix& right) const {
  return std::visit([&](const auto& op) { return op.apply_lowrank(left, right); }, op_);
}

DenseMatrix apply_full(const OperatorHandle& op, const DenseMatrix& x) {
  if (x.rows() != op.rows() || x.cols() != op.cols()) {
    throw ShapeError("apply_full: X is " + std::to_string(x.rows()) + "x" +
                     std::to_string(x.cols()) + ", operator acts on " + std::to_string(op.rows()) +
                     "x" + std::to_string(op.cols()));
  }
  return DenseMatrix(op.apply(x.values()));
}

DenseMatrix apply_factored(const OperatorHandle& op, const FactorPair& p) {
  if (p.rows() != op.rows() || p.cols() != op.cols()) {
    throw ShapeError("apply_factored: factor shapes do not match the operator");
  }
  return DenseMatrix(op.apply_lowrank(p.u().values(), p.v().values()));
}

FlowField flow_field(const OperatorHandle& op, const DenseMatrix& x) {
  if (std::abs(x.norm() - 1.0) > 1e-8) {
    throw DomainError("flow_field: X must have unit Frobenius norm");
  }
  DenseMatrix ax = apply_full(op, x);
  const double rho = (ax.values().array() * x.values().array()).sum();
  return {DenseMatrix(Matrix(ax.values() - rho * x.values())), rho};
}

DenseMatrix vectorize_operator(const MarkovGridOperator& op) {
  const Index m = op.rows();
  const Index n = op.cols();
  Matrix p = Matrix::Zero(m * n, m * n);
  for (const auto& term : op.terms()) {
    const Matrix& a = term.a.values();
    const Matrix& b = term.b.values();
    for (Index bj = 0; bj < n; ++bj) {
      for (Index bi = 0; bi < n; ++bi) {
        const double w = term.alpha * b(bi, bj);
        if (w == 0.0) continue;
        p.block(bi * m, bj * m, m, m) += w * a;
      }
    }
  }
  return DenseMatrix(std::move(p));
}

DenseMatrix neumann_laplacian(Index n) {
  if (n < 2) throw ShapeError("neumann_laplacian: needs at least two grid points");
  const double h = 1.0 / static_cast<double>(n - 1);
  const double inv_h2 = 1.0 / (h * h);
  Matrix a = Matrix::Zero(n, n);
  for (Index i = 0; i < n; ++i) {
    a(i, i) = -2.0 * inv_h2;
    if (i > 0) a(i, i - 1) = inv_h2;
    if (i + 1 < n) a(i, i + 1) = inv_h2;
  }
  a(0, 1) = 2.0 * inv_h2;
  a(n - 1, n - 2) = 2.0 * inv_h2;
  return DenseMatrix(std::move(a));
}

Vector grid_coordinates(Index n) {
  if (n < 2) throw ShapeError("grid_coordinates: needs at least two grid points");
  return Vector::LinSpaced(n, 0.0, 1.0);
}

HadamardGrowthOperator make_hadamard_growth(Index n, double eps, double eps_r, double r0) {
  using std::numbers::pi;
  const Vector x = grid_coordinates(n);
  const Vector phi = (2.0 * pi * x).array().sin();
  const Vector psi = (2.0 * pi * x).array().cos();
  Matrix growth = phi * psi.transpose();
  growth.array() += r0;
  return HadamardGrowthOperator(neumann_laplacian(n), eps, eps_r, DenseMatrix(std::move(growth)));
}

SeparableGrowthOperator make_separable_growth(Index n, double eps, double r0, double eps_r) {
  using std::numbers::pi;
  const Vector x = grid_coordinates(n);
  Vector phi = 0.3 * (3.0 * pi * x).array().sin();
  Vector psi = 0.2 * (pi * x).array().cos();
  return SeparableGrowthOperator(neumann_laplacian(n), eps, r0, eps_r, std::move(phi),
                                 std::move(psi));
}

}  // namespace nnlr
