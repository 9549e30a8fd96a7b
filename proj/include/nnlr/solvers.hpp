#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "nnlr/operators.hpp"

namespace nnlr {

struct IterationRecord {
  double lambda = 0.0;
  double residual = 0.0;
  double step = 0.0;
  bool accepted = true;
};

/// Result of any eigen-solver. X is always unit-normalized in the Frobenius
/// norm before lambda, the residual and the negative-entry count are taken.
struct EigenReport {
  std::string method;
  double lambda = 0.0;
  DenseMatrix x{1, 1};
  std::optional<FactorPair> factors;
  double residual = 0.0;
  std::size_t iterations = 0;
  std::size_t rejected_steps = 0;
  double wall_seconds = 0.0;
  std::size_t negative_entries = 0;
  bool converged = false;
  /// Factor change of the last accepted step (RNeg only).
  double d_u = 0.0;
  double d_v = 0.0;
  std::vector<IterationRecord> history;
};

/// ||A(X) - lambda X||_F for unit-norm X.
double residual(const OperatorHandle& op, const DenseMatrix& x, double lambda);

struct PowerConfig {
  double tol = 1e-8;
  long max_iters = 1'000'000;
  /// Shift sigma; defaults to op.nonnegative_shift().
  std::optional<double> shift;
  double damping = 0.5;
  bool record_history = false;
};

/// Damped, shifted power iteration
///   X <- normalize((1 - theta)(A(X) + sigma X) + theta X)
/// from the all-ones start (or init); stops once ||A(X) - rho(X) X||_F <= tol.
/// A run that exhausts max_iters returns its last iterate with
/// converged = false.
EigenReport power_reference(const OperatorHandle& op, const PowerConfig& cfg = {},
                            const std::optional<DenseMatrix>& init = std::nullopt);

struct ShiftInvertConfig {
  double tol = 1e-8;
  long max_iters = 200;
  bool record_history = false;
};

/// Perron eigenpair of a growth-diffusion operator by inverse iteration with
/// Collatz-Wielandt shifts: sigma_k = max_ij A(X)_ij / X_ij >= lambda_max,
/// X <- normalize((sigma_k I - A)^{-1} X). The shifted operator is a
/// nonsingular M-matrix, so its inverse is nonnegative and the iterates stay
/// positive. Solves use a banded LU of the vectorized operator.
EigenReport shift_invert_reference(const OperatorHandle& op, const ShiftInvertConfig& cfg = {});

enum class BacktrackRule {
  /// Accept when both ||P+(G_U)|| and ||P+(G_V)|| do not increase.
  kBothNorms,
  /// Accept when ||P+(G_U)||^2 + ||P+(G_V)||^2 does not increase.
  kCombinedNorm,
};

struct RNegConfig {
  Index rank = 1;
  double h0 = 1e-2;
  /// Largest step the controller may grow to; defaults to h0.
  std::optional<double> h_cap;
  double tol = 1e-10;
  long max_iters = 100'000;
  double beta_rej = 0.5;
  double beta_acc = 1.2;
  std::uint64_t seed = 0;
  BacktrackRule backtrack = BacktrackRule::kBothNorms;
  /// Backtracking never shrinks the step below this value; a step at the
  /// floor is taken regardless of the norm test. Defaults to h0, so the
  /// controller only undoes growth beyond the initial step. Zero restores
  /// unbounded halving down to h_min.
  std::optional<double> h_force;
  /// Below this step size the iteration is treated as stationary.
  double h_min = 1e-16;
  bool record_history = false;
};

/// Nonnegative low-rank integrator: explicit Euler on the projected factored
/// flow U' = P+_U(G V), V' = P+_V(G^T U) with admissible-step control,
/// backtracking and renormalization to ||U V^T||_F = 1.
EigenReport rneg_solve(const OperatorHandle& op, const RNegConfig& cfg,
                       const std::optional<FactorPair>& init = std::nullopt);

/// Factors of the i.i.d. uniform [0, 1] start used by rneg_solve, scaled to
/// ||U V^T||_F = 1.
FactorPair rneg_initial_factors(Index m, Index n, Index rank, std::uint64_t seed);

/// X = U S V^T with orthonormal U, V.
struct PSIState {
  Matrix u;
  Matrix s;
  Matrix v;
};

struct PSIConfig {
  Index rank = 1;
  double h = 1e-2;
  double tol = 1e-8;
  long max_steps = 100'000;
  std::uint64_t seed = 0;
  bool record_history = false;
};

/// First-order projector-splitting (K, S, L substeps) explicit integrator
/// for X' = A(X) - rho(X) X on the rank-r manifold, renormalizing S after
/// every step. Stops when ||X_{k+1} - X_k||_F <= tol * h.
/// One K, S, L step of size h followed by renormalization of S.
PSIState psi_step(const OperatorHandle& op, const PSIState& state, double h);

EigenReport psi_solve(const OperatorHandle& op, const PSIConfig& cfg,
                      const std::optional<PSIState>& init = std::nullopt);

}  // namespace nnlr
