#include <doctest.h>

#include <cmath>
#include <limits>

#include "fixtures.hpp"
#include "nnlr/matcore.hpp"

using namespace nnlr;
using fixtures::random_matrix;

namespace {

// Minimum-norm point of {x : <a, x> = 1, x_i = 0 for i in omega} from the
// KKT system [I C^T; C 0] [x; mu] = [0; b].
Vector kkt_minimizer(const Vector& a, const std::vector<Index>& omega) {
  const Index n = a.size();
  const Index k = 1 + static_cast<Index>(omega.size());
  Matrix kkt = Matrix::Zero(n + k, n + k);
  kkt.topLeftCorner(n, n).setIdentity();
  kkt.block(n, 0, 1, n) = a.transpose();
  for (std::size_t q = 0; q < omega.size(); ++q) kkt(n + 1 + static_cast<Index>(q), omega[q]) = 1.0;
  kkt.topRightCorner(n, k) = kkt.bottomLeftCorner(k, n).transpose();
  Vector rhs = Vector::Zero(n + k);
  rhs(n) = 1.0;
  return kkt.fullPivLu().solve(rhs).head(n);
}

}  // namespace

TEST_CASE("dense matrix construction rejects bad input") {
  CHECK_THROWS_AS(DenseMatrix(0, 3), ShapeError);
  Matrix bad = Matrix::Ones(2, 2);
  bad(1, 0) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(DenseMatrix{bad}, DomainError);
  bad(1, 0) = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(DenseMatrix{bad}, DomainError);
  CHECK_THROWS_AS((DenseMatrix{{1, 2}, {3}}), ShapeError);
  const DenseMatrix m{{1, 2, 3}, {4, 5, 6}};
  CHECK(m.rows() == 2);
  CHECK(m.cols() == 3);
  CHECK(m(1, 2) == 6.0);
}

TEST_CASE("factor pair invariants") {
  const DenseMatrix u{{1, 0}, {0, 1}, {1, 1}};
  const DenseMatrix v{{1, 2}, {3, 4}};
  const FactorPair p(u, v);
  CHECK(p.rank() == 2);
  CHECK(p.product().values().isApprox(u.values() * v.values().transpose()));
  CHECK_THROWS_AS(FactorPair(DenseMatrix{{-1.0}}, DenseMatrix{{1.0}}), DomainError);
  CHECK_THROWS_AS(FactorPair(u, DenseMatrix{{1.0}, {2.0}}), ShapeError);
  // rank 3 exceeds min(3, 2)
  CHECK_THROWS_AS(FactorPair(DenseMatrix::constant(3, 3, 1.0), DenseMatrix::constant(2, 3, 1.0)),
                  ShapeError);
}

TEST_CASE("frobenius inner product") {
  const DenseMatrix i2 = DenseMatrix::identity(2);
  CHECK(frobenius_inner(i2, i2) == 2.0);
  const DenseMatrix a{{1, 2}, {3, 4}};
  CHECK(frobenius_inner(a, DenseMatrix(2, 2)) == 0.0);
  CHECK(frobenius_inner(a, i2) == 5.0);
  CHECK(frobenius_inner(a, a) == doctest::Approx(a.norm() * a.norm()).epsilon(1e-15));
  CHECK_THROWS_AS(frobenius_inner(a, DenseMatrix(2, 3)), ShapeError);
}

TEST_CASE("zero pattern") {
  const DenseMatrix w{{0, 1}, {2, 0}};
  const ZeroPattern z(w);
  CHECK(z.size() == 2);
  CHECK(z.contains(0, 0));
  CHECK_FALSE(z.contains(0, 1));
  CHECK(z.positions() == std::vector<std::pair<Index, Index>>{{0, 0}, {1, 1}});
  CHECK_THROWS_AS(ZeroPattern(DenseMatrix{{-1.0}}), DomainError);
}

TEST_CASE("zero-pattern projection examples") {
  const DenseMatrix z(random_matrix(3, 4, 1));
  CHECK(project_zero_pattern(DenseMatrix::constant(3, 4, 0.5), z).values().isZero(0.0));
  CHECK(project_zero_pattern(DenseMatrix(3, 4), z).values() == z.values());
  CHECK(project_zero_pattern(DenseMatrix{{0, 1}}, DenseMatrix{{5, 7}}).values() ==
        DenseMatrix({{5, 0}}).values());
  CHECK_THROWS_AS(project_zero_pattern(DenseMatrix{{-1, 1}}, DenseMatrix{{5, 7}}), DomainError);
  CHECK_THROWS_AS(project_zero_pattern(DenseMatrix{{0, 1}}, DenseMatrix{{5}}), ShapeError);
}

TEST_CASE("zero-pattern projection is idempotent and self-adjoint") {
  for (std::uint32_t seed = 0; seed < 50; ++seed) {
    Matrix wv = random_matrix(5, 4, seed, 0.0, 1.0);
    wv = (wv.array() < 0.4).select(0.0, wv);
    const DenseMatrix w(wv);
    const DenseMatrix y(random_matrix(5, 4, seed + 100));
    const DenseMatrix z(random_matrix(5, 4, seed + 200));
    const DenseMatrix pz = project_zero_pattern(w, z);
    CHECK(project_zero_pattern(w, pz).values() == pz.values());
    CHECK(frobenius_inner(project_zero_pattern(w, y), z) ==
          doctest::Approx(frobenius_inner(y, pz)).epsilon(1e-14));
  }
}

TEST_CASE("feasible-direction projection examples") {
  const DenseMatrix z(random_matrix(3, 3, 7));
  CHECK(project_feasible_direction(DenseMatrix::constant(3, 3, 1.0), z).values() == z.values());
  CHECK(project_feasible_direction(DenseMatrix{{0, 0}}, DenseMatrix{{-3, 4}}).values() ==
        DenseMatrix({{0, 4}}).values());
  CHECK_THROWS_AS(project_feasible_direction(DenseMatrix{{-1.0}}, DenseMatrix{{1.0}}), DomainError);
}

TEST_CASE("feasible-direction projection properties") {
  for (std::uint32_t seed = 0; seed < 200; ++seed) {
    Matrix wv = random_matrix(6, 5, seed, 0.0, 1.0);
    wv = (wv.array() < 0.5).select(0.0, wv);
    const DenseMatrix w(wv);
    const DenseMatrix z(random_matrix(6, 5, seed + 1000));
    const DenseMatrix p = project_feasible_direction(w, z);
    for (Index j = 0; j < 5; ++j) {
      for (Index i = 0; i < 6; ++i) {
        if (wv(i, j) > 0.0) {
          CHECK(p(i, j) == z(i, j));
        } else {
          CHECK(p(i, j) >= 0.0);
        }
      }
    }
    CHECK(frobenius_inner(z, p) >= 0.0);
  }
}

TEST_CASE("lemma minimizer examples") {
  const auto x1 = lemma_minimizer(Eigen::Vector2d(2.0, 0.0), {});
  REQUIRE(x1.has_value());
  CHECK((*x1 - Eigen::Vector2d(0.5, 0.0)).norm() == doctest::Approx(0.0));
  const auto x2 = lemma_minimizer(Vector::Ones(3), {2});
  REQUIRE(x2.has_value());
  CHECK((*x2 - Eigen::Vector3d(0.5, 0.5, 0.0)).norm() < 1e-15);
  CHECK_FALSE(lemma_minimizer(Eigen::Vector3d(0.0, 0.0, 4.0), {2}).has_value());
  CHECK_THROWS_AS(lemma_minimizer(Vector::Ones(3), {3}), ShapeError);
}

TEST_CASE("lemma minimizer matches the KKT oracle and beats feasible points") {
  std::mt19937 gen(42);
  for (int trial = 0; trial < 40; ++trial) {
    const Vector a = random_matrix(6, 1, 500 + trial);
    std::vector<Index> omega;
    for (Index i = 0; i < 6; ++i) {
      if (std::bernoulli_distribution(0.4)(gen)) omega.push_back(i);
    }
    if (omega.size() == 6) omega.pop_back();
    const auto x = lemma_minimizer(a, omega);
    REQUIRE(x.has_value());
    const Vector oracle = kkt_minimizer(a, omega);
    CHECK((*x - oracle).norm() <= 1e-10);
    CHECK(a.dot(*x) == doctest::Approx(1.0).epsilon(1e-14));
    for (Index i : omega) CHECK((*x)(i) == 0.0);

    // Random feasible points: x* plus a direction orthogonal to a and zero on omega.
    int worse = 0;
    for (int k = 0; k < 1000; ++k) {
      Vector d = random_matrix(6, 1, static_cast<std::uint32_t>(10000 * trial + k));
      for (Index i : omega) d(i) = 0.0;
      Vector pa = a;
      for (Index i : omega) pa(i) = 0.0;
      d -= (d.dot(pa) / pa.squaredNorm()) * pa;
      const Vector y = *x + d;
      if (y.norm() >= x->norm() - 1e-14) ++worse;
    }
    CHECK(worse == 1000);
  }
}

TEST_CASE("thin QR examples") {
  const Matrix q0 = Eigen::HouseholderQR<Matrix>(random_matrix(5, 3, 3)).householderQ() *
                    Matrix::Identity(5, 3);
  const ThinQR orth = thin_qr(DenseMatrix(q0));
  for (Index j = 0; j < 3; ++j) {
    const double sign = orth.q.values().col(j).dot(q0.col(j)) > 0 ? 1.0 : -1.0;
    CHECK((orth.q.values().col(j) - sign * q0.col(j)).norm() < 1e-12);
  }
  CHECK((orth.r.values().cwiseAbs() - Matrix::Identity(3, 3)).norm() < 1e-12);

  const ThinQR f = thin_qr(DenseMatrix{{3.0}, {4.0}});
  CHECK(f.q(0, 0) == doctest::Approx(0.6).epsilon(1e-15));
  CHECK(f.q(1, 0) == doctest::Approx(0.8).epsilon(1e-15));
  CHECK(f.r(0, 0) == doctest::Approx(5.0).epsilon(1e-15));

  CHECK_THROWS_AS(thin_qr(DenseMatrix(2, 3)), ShapeError);
}

TEST_CASE("thin QR reconstruction and orthonormality") {
  auto check = [](const Matrix& m) {
    const ThinQR f = thin_qr(DenseMatrix(m));
    const Index r = m.cols();
    CHECK((f.q.values().transpose() * f.q.values() - Matrix::Identity(r, r)).norm() <= 1e-12);
    CHECK((f.q.values() * f.r.values() - m).norm() <= 1e-12 * std::max(1.0, m.norm()));
    CHECK(f.r.values().triangularView<Eigen::StrictlyLower>().toDenseMatrix().isZero(0.0));
    CHECK((f.r.values().diagonal().array() >= 0.0).all());
  };
  for (std::uint32_t seed = 0; seed < 20; ++seed) check(random_matrix(8, 3, seed));
  check(random_matrix(8, 3, 99) * 1e6);

  // Rank-deficient: a zero column and a repeated column.
  Matrix m = random_matrix(6, 4, 5);
  m.col(1).setZero();
  m.col(3) = m.col(0);
  check(m);
  const ThinQR f = thin_qr(DenseMatrix(m));
  CHECK(std::abs(f.r(1, 1)) < 1e-12);
  check(Matrix::Zero(4, 2));
}
