#pragma once

#include <Eigen/SparseCore>

#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "nnlr/matcore.hpp"

namespace nnlr {

namespace detail {

/// A fixed coefficient matrix that multiplies through a sparse copy when it
/// is sparse enough to pay off (identity completions, tridiagonal stencils).
class CoefficientMatrix {
public:
  explicit CoefficientMatrix(const DenseMatrix& m);

  const DenseMatrix& dense() const { return dense_; }
  Index size() const { return dense_.rows(); }

  /// M^T X
  Matrix transpose_times(const Matrix& x) const;
  /// M X
  Matrix times(const Matrix& x) const;
  /// X M
  Matrix right_times(const Matrix& x) const;
  /// X M^T
  Matrix right_times_transpose(const Matrix& x) const;

  /// Largest |i - j| over nonzero entries.
  Index bandwidth() const { return bandwidth_; }

private:
  DenseMatrix dense_;
  bool use_sparse_ = false;
  Eigen::SparseMatrix<double> sparse_;
  Eigen::SparseMatrix<double> sparse_t_;
  Index bandwidth_ = 0;
};

}  // namespace detail

struct MarkovTerm {
  double alpha;
  DenseMatrix a;  ///< m x m, acts along columns of X via A^T X
  DenseMatrix b;  ///< n x n, acts along rows of X via X B
};

/// X -> sum_p alpha_p A_p^T X B_p.
///
/// Construction only checks shapes and finiteness; stochasticity of the
/// terms is reported by validate_grid() so that malformed grids can still be
/// loaded and diagnosed.
class MarkovGridOperator {
public:
  explicit MarkovGridOperator(std::vector<MarkovTerm> terms);

  Index rows() const { return m_; }
  Index cols() const { return n_; }
  const std::vector<MarkovTerm>& terms() const { return terms_; }

  Matrix apply(const Matrix& x) const;
  Matrix apply_lowrank(const Matrix& left, const Matrix& right) const;

private:
  std::vector<MarkovTerm> terms_;
  std::vector<detail::CoefficientMatrix> a_;
  std::vector<detail::CoefficientMatrix> b_;
  Index m_ = 0;
  Index n_ = 0;
};

/// X -> eps (A X + X A^T) + eps_r (R o X), o the Hadamard product.
class HadamardGrowthOperator {
public:
  HadamardGrowthOperator(DenseMatrix laplacian, double eps, double eps_r, DenseMatrix growth);

  Index size() const { return a_.size(); }
  const DenseMatrix& laplacian() const { return a_.dense(); }
  const DenseMatrix& growth() const { return growth_; }
  double eps() const { return eps_; }
  double eps_r() const { return eps_r_; }

  Matrix apply(const Matrix& x) const;
  /// Forms L R^T once for the Hadamard term; the diffusion part stays factored.
  Matrix apply_lowrank(const Matrix& left, const Matrix& right) const;
  /// Diagonal of the vectorized operator contributed by the growth term.
  Matrix growth_diagonal() const;
  const detail::CoefficientMatrix& diffusion() const { return a_; }

private:
  detail::CoefficientMatrix a_;
  double eps_;
  double eps_r_;
  DenseMatrix growth_;
};

/// X -> eps (A X + X A^T) + r0 X + eps_r diag(phi) X diag(psi).
class SeparableGrowthOperator {
public:
  SeparableGrowthOperator(DenseMatrix laplacian, double eps, double r0, double eps_r, Vector phi,
                          Vector psi);

  Index size() const { return a_.size(); }
  const DenseMatrix& laplacian() const { return a_.dense(); }
  double eps() const { return eps_; }
  double r0() const { return r0_; }
  double eps_r() const { return eps_r_; }
  const Vector& phi() const { return phi_; }
  const Vector& psi() const { return psi_; }

  Matrix apply(const Matrix& x) const;
  Matrix apply_lowrank(const Matrix& left, const Matrix& right) const;
  Matrix growth_diagonal() const;
  const detail::CoefficientMatrix& diffusion() const { return a_; }

private:
  detail::CoefficientMatrix a_;
  double eps_;
  double r0_;
  double eps_r_;
  Vector phi_;
  Vector psi_;
};

enum class OperatorKind { kMarkovGrid, kHadamardGrowth, kSeparableGrowth };

std::string_view to_string(OperatorKind kind);

/// Uniform access to the three operator families plus the flags the solvers
/// rely on. Flags are declared from the operator kind at construction.
class OperatorHandle {
public:
  using Variant = std::variant<MarkovGridOperator, HadamardGrowthOperator, SeparableGrowthOperator>;

  OperatorHandle(MarkovGridOperator op);
  OperatorHandle(HadamardGrowthOperator op);
  OperatorHandle(SeparableGrowthOperator op);

  OperatorKind kind() const;
  const Variant& get() const { return op_; }
  Index rows() const;
  Index cols() const;

  /// X >= 0 implies A(X) >= 0.
  bool nonnegativity_preserving() const { return nonnegativity_preserving_; }
  /// Off-diagonal part of the vectorized operator is nonnegative.
  bool metzler() const { return metzler_; }

  /// Smallest sigma for which X -> A(X) + sigma X is declared
  /// nonnegativity preserving (0 for Markov grids).
  double nonnegative_shift() const;

  // Unchecked kernels for solver inner loops.
  Matrix apply(const Matrix& x) const;
  Matrix apply_lowrank(const Matrix& left, const Matrix& right) const;

private:
  Variant op_;
  bool nonnegativity_preserving_ = false;
  bool metzler_ = false;
};

/// Exact action of the operator on a full matrix.
DenseMatrix apply_full(const OperatorHandle& op, const DenseMatrix& x);

/// Action on U V^T evaluated through the factors.
DenseMatrix apply_factored(const OperatorHandle& op, const FactorPair& p);

struct FlowField {
  DenseMatrix g;  ///< A(X) - rho X
  double rho;     ///< <A(X), X>
};

/// Right-hand side of the norm-preserving eigen-flow at a unit-norm X.
FlowField flow_field(const OperatorHandle& op, const DenseMatrix& x);

/// P = sum_p alpha_p B_p (x) A_p, so that vec(A(X)) = P^T vec(X) with
/// column-wise vec.
DenseMatrix vectorize_operator(const MarkovGridOperator& op);

/// Second-order Neumann Laplacian on n uniform points of [0, 1] with mirrored
/// ghost points: interior rows (1, -2, 1)/h^2, boundary rows (-2, 2)/h^2.
DenseMatrix neumann_laplacian(Index n);

/// x_i = i / (n - 1), i = 0..n-1.
Vector grid_coordinates(Index n);

/// Growth R = r0 + sin(2 pi x) cos(2 pi y)^T, phi along rows.
HadamardGrowthOperator make_hadamard_growth(Index n, double eps, double eps_r, double r0);

/// phi = 0.3 sin(3 pi x), psi = 0.2 cos(pi y).
SeparableGrowthOperator make_separable_growth(Index n, double eps, double r0, double eps_r);

}  // namespace nnlr
