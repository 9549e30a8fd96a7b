#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "nnlr/operators.hpp"

namespace nnlr {

/// Seeded 64-bit Mersenne Twister with hand-rolled variate transforms so that
/// draws do not depend on the standard library's distribution internals.
class Rng {
public:
  static constexpr std::string_view kAlgorithm = "mt19937_64";

  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  /// Standard exponential variate.
  double exponential() { return -std::log1p(-uniform()); }
  /// Uniform index in [0, k).
  std::size_t index(std::size_t k) {
    return static_cast<std::size_t>(uniform() * static_cast<double>(k)) % k;
  }

private:
  std::mt19937_64 engine_;
};

/// Uniform sample from the probability simplex of dimension k
/// (Dirichlet with all parameters one).
Vector dirichlet_row(Index k, Rng& rng);

struct BlockGridSpec {
  std::vector<Index> block_sizes;
  double delta = 0.0;  ///< weight of the dense fully connected term
  std::uint64_t seed = 0;
};

struct RandomGridSpec {
  Index n = 0;
  Index t = 0;
  double density = 1.0;
  std::uint64_t seed = 0;
};

/// t block terms plus one dense term. Term i carries Dirichlet rows inside
/// block i and the identity on every other row, so each factor stays row
/// stochastic. Weights: (1 - delta) * Dirichlet(t) for the blocks, delta for
/// the dense term.
MarkovGridOperator generate_block_grid(const BlockGridSpec& spec);

/// t terms of sparse-random row-normalized factors; weights from Dirichlet(t).
MarkovGridOperator generate_random_grid(const RandomGridSpec& spec);

/// Stationary probability vector mu (P^T mu = mu, sum 1) of a row-stochastic
/// matrix, by power iteration on (P^T + I) / 2.
Vector stationary_vector(const DenseMatrix& p, double tol = 1e-13, long max_iters = 1'000'000);

/// mu_A mu_B^T, the rank-one stationary state of
/// a1 A^T X + a2 X B + a3 A^T X B for irreducible A, B.
DenseMatrix rank_one_stationary(const DenseMatrix& a, const DenseMatrix& b);

struct GridValidation {
  bool ok = true;
  double max_row_sum_deviation = 0.0;
  double weight_sum_deviation = 0.0;
  std::size_t negative_entries = 0;
  std::vector<std::string> failures;
};

GridValidation validate_grid(const MarkovGridOperator& op, double tol = 1e-12);

}  // namespace nnlr
