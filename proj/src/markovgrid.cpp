#include "nnlr/markovgrid.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

namespace nnlr {

Vector dirichlet_row(Index k, Rng& rng) {
  if (k < 1) throw DomainError("dirichlet_row: dimension must be at least one");
  Vector v(k);
  for (Index i = 0; i < k; ++i) v(i) = rng.exponential();
  const double total = v.sum();
  if (total == 0.0) {
    // Every exponential draw underflowed to zero; fall back to a vertex.
    v.setZero();
    v(static_cast<Index>(rng.index(static_cast<std::size_t>(k)))) = 1.0;
    return v;
  }
  return v / total;
}

namespace {

Matrix block_factor(Index n, Index offset, Index size, Rng& rng) {
  Matrix a = Matrix::Identity(n, n);
  for (Index r = offset; r < offset + size; ++r) {
    a.row(r).setZero();
    a.row(r).segment(offset, size) = dirichlet_row(size, rng).transpose();
  }
  return a;
}

Matrix dense_factor(Index n, Rng& rng) {
  Matrix a(n, n);
  for (Index r = 0; r < n; ++r) a.row(r) = dirichlet_row(n, rng).transpose();
  return a;
}

Matrix sparse_random_factor(Index n, double density, Rng& rng) {
  Matrix a = Matrix::Zero(n, n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) {
      if (rng.uniform() < density) a(i, j) = rng.uniform();
    }
    while (a.row(i).sum() == 0.0) {
      a(i, static_cast<Index>(rng.index(static_cast<std::size_t>(n)))) = rng.uniform();
    }
    a.row(i) /= a.row(i).sum();
  }
  return a;
}

}  // namespace

MarkovGridOperator generate_block_grid(const BlockGridSpec& spec) {
  if (spec.block_sizes.empty()) throw DomainError("block grid needs at least one block");
  if (!(spec.delta >= 0.0 && spec.delta < 1.0)) {
    throw DomainError("block grid: delta must lie in [0, 1)");
  }
  Index n = 0;
  for (Index size : spec.block_sizes) {
    if (size < 1) throw DomainError("block grid: block sizes must be positive");
    n += size;
  }
  const auto t = static_cast<Index>(spec.block_sizes.size());

  Rng rng(spec.seed);
  std::vector<MarkovTerm> terms;
  terms.reserve(static_cast<std::size_t>(t + 1));
  const Vector weights = (1.0 - spec.delta) * dirichlet_row(t, rng);
  Index offset = 0;
  for (Index i = 0; i < t; ++i) {
    const Index size = spec.block_sizes[static_cast<std::size_t>(i)];
    Matrix a = block_factor(n, offset, size, rng);
    Matrix b = block_factor(n, offset, size, rng);
    terms.push_back({weights(i), DenseMatrix(std::move(a)), DenseMatrix(std::move(b))});
    offset += size;
  }
  Matrix a = dense_factor(n, rng);
  Matrix b = dense_factor(n, rng);
  terms.push_back({spec.delta, DenseMatrix(std::move(a)), DenseMatrix(std::move(b))});
  return MarkovGridOperator(std::move(terms));
}

MarkovGridOperator generate_random_grid(const RandomGridSpec& spec) {
  if (spec.n < 1 || spec.t < 1) throw DomainError("random grid: n and t must be positive");
  if (!(spec.density > 0.0 && spec.density <= 1.0)) {
    throw DomainError("random grid: density must lie in (0, 1]");
  }
  Rng rng(spec.seed);
  std::vector<MarkovTerm> terms;
  terms.reserve(static_cast<std::size_t>(spec.t));
  for (Index p = 0; p < spec.t; ++p) {
    Matrix a = sparse_random_factor(spec.n, spec.density, rng);
    Matrix b = sparse_random_factor(spec.n, spec.density, rng);
    terms.push_back({0.0, DenseMatrix(std::move(a)), DenseMatrix(std::move(b))});
  }
  const Vector weights = dirichlet_row(spec.t, rng);
  for (Index p = 0; p < spec.t; ++p) terms[static_cast<std::size_t>(p)].alpha = weights(p);
  return MarkovGridOperator(std::move(terms));
}

Vector stationary_vector(const DenseMatrix& p, double tol, long max_iters) {
  if (p.rows() != p.cols()) throw ShapeError("stationary_vector: matrix must be square");
  const Matrix pt = p.values().transpose();
  const Index n = p.rows();
  Vector mu = Vector::Constant(n, 1.0 / static_cast<double>(n));
  for (long it = 0; it < max_iters; ++it) {
    Vector next = 0.5 * (pt * mu + mu);
    next /= next.sum();
    const double change = (next - mu).lpNorm<1>();
    mu = std::move(next);
    if (change <= tol) return mu;
  }
  throw ConvergenceError("stationary_vector: no convergence; the chain may be reducible");
}

DenseMatrix rank_one_stationary(const DenseMatrix& a, const DenseMatrix& b) {
  const Vector mu_a = stationary_vector(a);
  const Vector mu_b = stationary_vector(b);
  return DenseMatrix(Matrix(mu_a * mu_b.transpose()));
}

GridValidation validate_grid(const MarkovGridOperator& op, double tol) {
  GridValidation report;
  double weight_sum = 0.0;
  const auto& terms = op.terms();
  for (std::size_t p = 0; p < terms.size(); ++p) {
    const auto& term = terms[p];
    weight_sum += term.alpha;
    if (term.alpha < 0.0) {
      report.failures.push_back("term " + std::to_string(p) + ": negative weight");
    }
    const auto check = [&](const DenseMatrix& m, const char* name) {
      const Matrix& v = m.values();
      const auto negatives = static_cast<std::size_t>((v.array() < 0.0).count());
      if (negatives > 0) {
        report.negative_entries += negatives;
        report.failures.push_back("term " + std::to_string(p) + ": " + name + " has " +
                                  std::to_string(negatives) + " negative entries");
      }
      for (Index i = 0; i < v.rows(); ++i) {
        const double sum = v.row(i).sum();
        const double dev = std::abs(sum - 1.0);
        report.max_row_sum_deviation = std::max(report.max_row_sum_deviation, dev);
        if (dev > tol) {
          std::ostringstream msg;
          msg.precision(17);
          msg << "term " << p << ": " << name << " row " << i << " sums to " << sum;
          report.failures.push_back(msg.str());
        }
      }
    };
    check(term.a, "A");
    check(term.b, "B");
  }
  report.weight_sum_deviation = std::abs(weight_sum - 1.0);
  if (report.weight_sum_deviation > tol) {
    std::ostringstream msg;
    msg.precision(17);
    msg << "weights sum to " << weight_sum;
    report.failures.push_back(msg.str());
  }
  report.ok = report.failures.empty();
  return report;
}

}  // namespace nnlr
