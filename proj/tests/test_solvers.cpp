#include <doctest.h>

#include <Eigen/Eigenvalues>
#include <cmath>

#include "fixtures.hpp"
#include "nnlr/lowrank.hpp"
#include "nnlr/markovgrid.hpp"
#include "nnlr/solvers.hpp"

using namespace nnlr;
using fixtures::random_matrix;

namespace {

Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Index i = 0; i < a.rows(); ++i)
    for (Index j = 0; j < a.cols(); ++j) out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

// Dense vectorized matrix of any operator, column by column.
Matrix dense_operator(const OperatorHandle& op) {
  const Index m = op.rows();
  const Index n = op.cols();
  Matrix l(m * n, m * n);
  for (Index k = 0; k < m * n; ++k) {
    Matrix e = Matrix::Zero(m, n);
    e(k % m, k / m) = 1.0;
    const Matrix col = op.apply(e);
    l.col(k) = Eigen::Map<const Vector>(col.data(), col.size());
  }
  return l;
}

// Rightmost eigenpair of a dense real matrix known to have a real rightmost eigenvalue.
std::pair<double, Vector> dense_rightmost(const Matrix& l) {
  Eigen::EigenSolver<Matrix> es(l);
  Index best = 0;
  for (Index k = 1; k < l.rows(); ++k)
    if (es.eigenvalues()(k).real() > es.eigenvalues()(best).real()) best = k;
  Vector v = es.eigenvectors().col(best).real();
  v /= v.norm();
  if (v.sum() < 0) v = -v;
  return {es.eigenvalues()(best).real(), v};
}

// Symmetric Metzler operator X -> A X + X A with A = tridiag(1, -2, 1) plus a diagonal bump.
OperatorHandle symmetric_operator(Index n) {
  Matrix a = Matrix::Zero(n, n);
  for (Index i = 0; i < n; ++i) {
    a(i, i) = -2.0 + 0.5 * std::sin(1.0 + i);
    if (i + 1 < n) a(i, i + 1) = a(i + 1, i) = 1.0;
  }
  return OperatorHandle(SeparableGrowthOperator(DenseMatrix(a), 1.0, 0.0, 0.0, Vector::Zero(n),
                                                Vector::Zero(n)));
}

double sign_free_distance(const Matrix& a, const Matrix& b) {
  return std::min((a - b).norm(), (a + b).norm());
}

}  // namespace

TEST_CASE("power reference on the grid walk") {
  const OperatorHandle op(fixtures::grid3_walk());
  const EigenReport r = power_reference(op, {.tol = 1e-12});
  CHECK(r.converged);
  const Vector mu = stationary_vector(fixtures::path3());
  CHECK((r.x.values() - fixtures::unit(mu * mu.transpose())).norm() <= 1e-10);
  CHECK(r.lambda == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(r.negative_entries == 0);
  CHECK(r.method == "Power");
}

TEST_CASE("power reference on the sticky three-state grid") {
  const EigenReport r = power_reference(OperatorHandle(fixtures::sticky3()), {.tol = 1e-12});
  CHECK(std::abs(r.lambda - 1.0) <= 1e-8);
  CHECK((r.x.values() - fixtures::unit(fixtures::sticky3_stationary())).cwiseAbs().maxCoeff() <= 5e-4);
  CHECK(flow_field(OperatorHandle(fixtures::sticky3()), r.x).g.norm() <= 10 * 1e-12);
}

TEST_CASE("power reference on a separable operator with zero growth modulation") {
  const Index n = 12;
  const OperatorHandle op(SeparableGrowthOperator(neumann_laplacian(n), 0.1, 0.3, 0.01,
                                                  Vector::Zero(n), Vector::Zero(n)));
  const EigenReport r = power_reference(op, {.tol = 1e-10});
  CHECK(r.converged);
  CHECK(r.lambda == doctest::Approx(0.3).epsilon(1e-10));
  CHECK((r.x.values() - Matrix::Constant(n, n, 1.0 / n)).norm() <= 1e-9);
}

TEST_CASE("power reference respects its iteration budget") {
  const OperatorHandle op(fixtures::random_grid(10, 10, 2, 3));
  const EigenReport r = power_reference(op, {.tol = 1e-15, .max_iters = 3});
  CHECK_FALSE(r.converged);
  CHECK_THROWS_AS(power_reference(op, {.damping = 1.0}), DomainError);
  CHECK_THROWS_AS(power_reference(op, {}, DenseMatrix(3, 3)), ShapeError);
}

TEST_CASE("power reference is independent of the start") {
  const OperatorHandle op(generate_random_grid({15, 3, 0.9, 8}));
  std::vector<Matrix> limits;
  for (std::uint32_t seed = 0; seed < 20; ++seed) {
    const DenseMatrix start(fixtures::unit(random_matrix(15, 15, seed, 0.01, 1.0)));
    const EigenReport r = power_reference(op, {.tol = 1e-12}, start);
    REQUIRE(r.converged);
    limits.push_back(r.x.values());
  }
  for (std::size_t i = 0; i < limits.size(); ++i)
    for (std::size_t j = i + 1; j < limits.size(); ++j)
      CHECK(sign_free_distance(limits[i], limits[j]) <= 1e-6);
}

TEST_CASE("shift-invert reference matches a dense eigensolver") {
  std::vector<OperatorHandle> ops{OperatorHandle(make_hadamard_growth(8, 0.01, 3 * M_PI, 0.1)),
                                  OperatorHandle(make_hadamard_growth(7, 0.05, 2.0, 0.3)),
                                  OperatorHandle(make_separable_growth(8, 0.1, 0.3, 0.01)),
                                  OperatorHandle(make_separable_growth(9, 0.02, 0.1, 5.0))};
  for (const OperatorHandle& op : ops) {
    const auto [lambda, v] = dense_rightmost(dense_operator(op));
    const EigenReport r = shift_invert_reference(op, {.tol = 1e-11});
    CHECK(r.converged);
    CHECK(r.lambda == doctest::Approx(lambda).epsilon(1e-10));
    const Vector x = Eigen::Map<const Vector>(r.x.values().data(), r.x.values().size());
    CHECK((x - v).norm() <= 1e-6);
    CHECK(r.negative_entries == 0);
    CHECK(flow_field(op, r.x).g.norm() <= 10 * 1e-11);
  }
  CHECK_THROWS_AS(shift_invert_reference(OperatorHandle(fixtures::grid3_walk())), DomainError);
}

TEST_CASE("residual examples") {
  const OperatorHandle op(fixtures::grid3_walk());
  const Vector mu = stationary_vector(fixtures::path3());
  const DenseMatrix x(fixtures::unit(mu * mu.transpose()));
  CHECK(residual(op, x, 1.0) <= 1e-12);
  CHECK(residual(op, x, 1.25) == doctest::Approx(0.25).epsilon(1e-12));
  for (std::uint32_t seed = 0; seed < 10; ++seed) {
    const DenseMatrix y(fixtures::unit(random_matrix(3, 3, seed)));
    const FlowField f = flow_field(op, y);
    CHECK(residual(op, y, f.rho) == doctest::Approx(f.g.norm()).epsilon(1e-13));
  }
  CHECK_THROWS_AS(residual(op, DenseMatrix::constant(3, 3, 1.0), 1.0), DomainError);
}

TEST_CASE("RNeg initial factors") {
  const FactorPair p = rneg_initial_factors(6, 4, 2, 7);
  CHECK(p.u().nonnegative());
  CHECK(p.v().nonnegative());
  CHECK(p.product().norm() == doctest::Approx(1.0).epsilon(1e-14));
  const FactorPair q = rneg_initial_factors(6, 4, 2, 7);
  CHECK(p.u().values() == q.u().values());
  CHECK(rneg_initial_factors(6, 4, 2, 8).u().values() != p.u().values());
}

TEST_CASE("RNeg iterates stay nonnegative, normalized and ascending") {
  const OperatorHandle op(fixtures::random_grid(8, 7, 3, 4));
  for (long k = 1; k <= 25; ++k) {
    RNegConfig cfg{.rank = 2, .h0 = 0.5, .max_iters = k, .seed = 3};
    const EigenReport r = rneg_solve(op, cfg);
    REQUIRE(r.factors.has_value());
    const Matrix& u = r.factors->u().values();
    const Matrix& v = r.factors->v().values();
    CHECK(u.minCoeff() >= 0.0);
    CHECK(v.minCoeff() >= 0.0);
    CHECK(r.negative_entries == 0);
    CHECK(std::abs(std::sqrt(((u.transpose() * u) * (v.transpose() * v)).trace()) - 1.0) <= 1e-10);
    const Matrix x = u * v.transpose();
    const Matrix g = op.apply(x) - frobenius_inner(DenseMatrix(op.apply(x)), DenseMatrix(x)) * x;
    const Matrix gu = g * v;
    const Matrix gv = g.transpose() * u;
    CHECK((gu.array() * kernels::feasible_direction(u, gu).array()).sum() >= 0.0);
    CHECK((gv.array() * kernels::feasible_direction(v, gv).array()).sum() >= 0.0);
  }
}

TEST_CASE("RNeg lambda increases for a self-adjoint operator") {
  const OperatorHandle op = symmetric_operator(10);
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    RNegConfig cfg{.rank = 2, .h0 = 1e-2, .max_iters = 3000, .seed = seed, .record_history = true};
    const EigenReport r = rneg_solve(op, cfg);
    double previous = -std::numeric_limits<double>::infinity();
    int accepted = 0;
    for (const IterationRecord& rec : r.history) {
      if (!rec.accepted) continue;
      ++accepted;
      CHECK(rec.lambda >= previous - 1e-10);
      previous = rec.lambda;
    }
    CHECK(accepted > 100);
  }
}

TEST_CASE("RNeg recovers the rank-one stationary state") {
  Rng rng(5);
  for (int inst = 0; inst < 5; ++inst) {
    const DenseMatrix a = fixtures::random_stochastic(6, 100 + inst);
    const DenseMatrix b = fixtures::random_stochastic(6, 200 + inst);
    const Vector alpha = dirichlet_row(3, rng);
    const DenseMatrix id = DenseMatrix::identity(6);
    const OperatorHandle op(MarkovGridOperator({{alpha(0), a, id}, {alpha(1), id, b}, {alpha(2), a, b}}));
    const DenseMatrix xstar = rank_one_stationary(a, b);
    const EigenReport r = rneg_solve(op, {.rank = 1, .h0 = 1.0, .seed = static_cast<std::uint64_t>(inst)});
    CHECK(r.converged);
    CHECK(best_scaled_error(r.x, xstar) <= 1e-4);
    CHECK(r.negative_entries == 0);
  }
}

TEST_CASE("RNeg started at a fixed point stays there") {
  const OperatorHandle op(fixtures::grid3_walk());
  const Vector mu = stationary_vector(fixtures::path3());
  const FactorPair start{DenseMatrix(Matrix(mu)), DenseMatrix(Matrix(mu))};
  const EigenReport r = rneg_solve(op, {.rank = 1}, start);
  CHECK(r.converged);
  CHECK(r.iterations <= 2);
  CHECK((r.x.values() - fixtures::unit(mu * mu.transpose())).norm() <= 1e-12);
  CHECK(r.lambda == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("RNeg on the sticky three-state grid") {
  const OperatorHandle op(fixtures::sticky3());
  const DenseMatrix xstar = power_reference(op, {.tol = 1e-13}).x;
  const EigenReport r = rneg_solve(op, {.rank = 2, .seed = 1});
  CHECK(r.negative_entries == 0);
  const double err = best_scaled_error(r.x, xstar);
  CHECK(err >= 0.5336 - 5e-4);
  CHECK(err <= 0.60);
}

TEST_CASE("RNeg config validation") {
  const OperatorHandle op(fixtures::grid3_walk());
  CHECK_THROWS_AS(rneg_solve(op, {.rank = 4}), DomainError);
  CHECK_THROWS_AS(rneg_solve(op, {.h0 = 0.0}), DomainError);
  CHECK_THROWS_AS(rneg_solve(op, {.beta_rej = 1.0}), DomainError);
  CHECK_THROWS_AS(rneg_solve(op, {.h0 = 1.0, .h_cap = 0.5}), DomainError);
  CHECK_THROWS_AS(rneg_solve(op, {.rank = 2}, rneg_initial_factors(3, 3, 1, 0)), ShapeError);
}

TEST_CASE("both backtracking rules reach the rank-one solution") {
  const OperatorHandle op(fixtures::grid3_walk());
  const Vector mu = stationary_vector(fixtures::path3());
  const DenseMatrix xstar(Matrix(mu * mu.transpose()));
  for (BacktrackRule rule : {BacktrackRule::kBothNorms, BacktrackRule::kCombinedNorm}) {
    const EigenReport r = rneg_solve(op, {.rank = 1, .h0 = 0.5, .backtrack = rule, .h_force = 0.0});
    CHECK(best_scaled_error(r.x, xstar) <= 1e-6);
    CHECK(r.negative_entries == 0);
  }
}

TEST_CASE("PSI steps keep orthonormal factors") {
  const OperatorHandle op(fixtures::random_grid(9, 8, 3, 6));
  PSIState state{Matrix::Identity(9, 3), Matrix::Identity(3, 3), Matrix::Identity(8, 3)};
  for (int k = 0; k < 200; ++k) {
    state = psi_step(op, state, 0.1);
    CHECK((state.u.transpose() * state.u - Matrix::Identity(3, 3)).norm() <= 1e-9);
    CHECK((state.v.transpose() * state.v - Matrix::Identity(3, 3)).norm() <= 1e-9);
    CHECK(state.s.norm() == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("PSI started at an eigenmatrix does not move") {
  const OperatorHandle op(fixtures::grid3_walk());
  const Vector mu = stationary_vector(fixtures::path3());
  Matrix u = Matrix::Zero(3, 2);
  Matrix v = Matrix::Zero(3, 2);
  u.col(0) = mu / mu.norm();
  v.col(0) = mu / mu.norm();
  u(0, 1) = v(0, 1) = 1.0 / std::sqrt(2.0);
  u(2, 1) = v(2, 1) = -1.0 / std::sqrt(2.0);
  Matrix s = Matrix::Zero(2, 2);
  s(0, 0) = 1.0;
  const EigenReport r = psi_solve(op, {.rank = 2, .h = 0.1}, PSIState{u, s, v});
  CHECK(r.converged);
  CHECK(r.iterations == 1);
  CHECK(r.lambda == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("PSI converges on a random grid") {
  const OperatorHandle op(generate_random_grid({30, 3, 0.9, 2}));
  const EigenReport ref = power_reference(op, {.tol = 1e-12});
  const EigenReport r = psi_solve(op, {.rank = 3, .h = 0.1, .tol = 1e-10, .seed = 4});
  CHECK(r.converged);
  const double svd_err =
      best_scaled_error(truncated_svd(ref.x, 3).reconstruct(), ref.x);
  CHECK(best_scaled_error(r.x, ref.x) <= 10 * svd_err + 1e-8);
}

TEST_CASE("flow field is the sphere gradient of the Rayleigh quotient") {
  const OperatorHandle op = symmetric_operator(7);
  for (std::uint32_t seed = 0; seed < 10; ++seed) {
    const Matrix x = fixtures::unit(random_matrix(7, 7, seed, 0.0, 1.0));
    const Matrix g = flow_field(op, DenseMatrix(x)).g.values();
    auto rho_along = [&](double t) {
      const Matrix y = fixtures::unit(x + t * g);
      return (op.apply(y).array() * y.array()).sum();
    };
    const double step = 1e-6;
    const double fd = (rho_along(step) - rho_along(-step)) / (2 * step);
    const double exact = 2.0 * g.squaredNorm();
    CHECK(std::abs(fd - exact) <= 1e-5 * exact);
  }
}

TEST_CASE("dense oracle agrees with the vectorized Kronecker form") {
  const Index n = 5;
  const HadamardGrowthOperator had = make_hadamard_growth(n, 0.02, 1.0, 0.1);
  const Matrix lap = neumann_laplacian(n).values();
  Matrix expected = 0.02 * (kron(Matrix::Identity(n, n), lap) + kron(lap, Matrix::Identity(n, n)));
  const Matrix d = had.growth_diagonal();
  expected.diagonal() += Eigen::Map<const Vector>(d.data(), d.size());
  CHECK((dense_operator(OperatorHandle(had)) - expected).norm() <= 1e-12);
}
