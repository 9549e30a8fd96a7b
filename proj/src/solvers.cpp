#include "nnlr/solvers.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <string>

#include "nnlr/markovgrid.hpp"

namespace nnlr {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

double inner(const Matrix& a, const Matrix& b) { return (a.array() * b.array()).sum(); }

void require_unit_norm(const DenseMatrix& x, const char* what) {
  if (std::abs(x.norm() - 1.0) > 1e-8) {
    throw DomainError(std::string(what) + ": X must have unit Frobenius norm");
  }
}

void finish_report(EigenReport& report, const OperatorHandle& op, Matrix x) {
  const double nrm = x.norm();
  if (!(nrm > 0.0) || !std::isfinite(nrm)) {
    throw ConvergenceError(report.method + ": iterate vanished or is not finite");
  }
  x /= nrm;
  const Matrix ax = op.apply(x);
  report.lambda = inner(ax, x);
  report.residual = (ax - report.lambda * x).norm();
  report.negative_entries = kernels::count_negative(x);
  report.x = DenseMatrix(std::move(x));
}

// Band storage for an N x N matrix with equal lower and upper bandwidth.
class BandMatrix {
public:
  BandMatrix(Index n, Index bandwidth)
      : n_(n), bw_(bandwidth), data_(Matrix::Zero(n, 2 * bandwidth + 1)) {}

  double& at(Index i, Index j) { return data_(i, j - i + bw_); }
  double at(Index i, Index j) const { return data_(i, j - i + bw_); }
  Index size() const { return n_; }
  Index bandwidth() const { return bw_; }

  // In-place LU without pivoting; valid for nonsingular M-matrices.
  void factorize() {
    for (Index k = 0; k < n_; ++k) {
      const double pivot = at(k, k);
      if (!(pivot > 0.0) || !std::isfinite(pivot)) {
        throw ConvergenceError("banded LU: nonpositive pivot; shift is not above the spectrum");
      }
      const Index last = std::min(n_ - 1, k + bw_);
      for (Index i = k + 1; i <= last; ++i) {
        double& lik = at(i, k);
        if (lik == 0.0) continue;
        lik /= pivot;
        for (Index j = k + 1; j <= last; ++j) at(i, j) -= lik * at(k, j);
      }
    }
  }

  Vector solve(Vector b) const {
    for (Index i = 0; i < n_; ++i) {
      const Index first = std::max<Index>(0, i - bw_);
      double acc = b(i);
      for (Index j = first; j < i; ++j) acc -= at(i, j) * b(j);
      b(i) = acc;
    }
    for (Index i = n_ - 1; i >= 0; --i) {
      const Index last = std::min(n_ - 1, i + bw_);
      double acc = b(i);
      for (Index j = i + 1; j <= last; ++j) acc -= at(i, j) * b(j);
      b(i) = acc / at(i, i);
    }
    return b;
  }

private:
  Index n_;
  Index bw_;
  Matrix data_;
};

struct GrowthParts {
  const DenseMatrix* laplacian;
  double eps;
  Matrix growth;  // diagonal of the vectorized operator from the growth term
  Index bandwidth;
};

GrowthParts growth_parts(const OperatorHandle& op) {
  if (const auto* h = std::get_if<HadamardGrowthOperator>(&op.get())) {
    return {&h->laplacian(), h->eps(), h->growth_diagonal(), h->diffusion().bandwidth()};
  }
  if (const auto* s = std::get_if<SeparableGrowthOperator>(&op.get())) {
    return {&s->laplacian(), s->eps(), s->growth_diagonal(), s->diffusion().bandwidth()};
  }
  throw DomainError("shift_invert_reference: requires a growth-diffusion operator");
}

// sigma I - [eps (I (x) A + A (x) I) + diag(vec(growth))], column-major vec.
BandMatrix shifted_vectorized(const GrowthParts& parts, double sigma) {
  const Matrix& a = parts.laplacian->values();
  const Index n = a.rows();
  const Index big = n * n;
  const Index bw = std::max<Index>(n * parts.bandwidth, parts.bandwidth);
  BandMatrix m(big, bw);
  for (Index j = 0; j < n; ++j) {
    for (Index i = 0; i < n; ++i) {
      const Index row = i + n * j;
      m.at(row, row) += sigma - parts.growth(i, j);
      for (Index k = std::max<Index>(0, i - parts.bandwidth);
           k <= std::min(n - 1, i + parts.bandwidth); ++k) {
        m.at(row, k + n * j) -= parts.eps * a(i, k);
      }
      for (Index k = std::max<Index>(0, j - parts.bandwidth);
           k <= std::min(n - 1, j + parts.bandwidth); ++k) {
        m.at(row, i + n * k) -= parts.eps * a(j, k);
      }
    }
  }
  return m;
}

}  // namespace

double residual(const OperatorHandle& op, const DenseMatrix& x, double lambda) {
  require_unit_norm(x, "residual");
  const DenseMatrix ax = apply_full(op, x);
  return (ax.values() - lambda * x.values()).norm();
}

EigenReport power_reference(const OperatorHandle& op, const PowerConfig& cfg,
                            const std::optional<DenseMatrix>& init) {
  if (!(cfg.damping >= 0.0 && cfg.damping < 1.0)) {
    throw DomainError("power_reference: damping must lie in [0, 1)");
  }
  const auto start = Clock::now();
  const double sigma = cfg.shift.value_or(op.nonnegative_shift());
  if (sigma < 0.0) throw DomainError("power_reference: shift must be nonnegative");

  EigenReport report;
  report.method = "Power";
  Matrix x = Matrix::Constant(op.rows(), op.cols(), 1.0);
  if (init) {
    if (init->rows() != op.rows() || init->cols() != op.cols()) {
      throw ShapeError("power_reference: start has the wrong shape");
    }
    x = init->values();
    if (!(x.norm() > 0.0)) throw DomainError("power_reference: start must be nonzero");
  }
  x /= x.norm();
  for (long it = 0; it < cfg.max_iters; ++it) {
    const Matrix ax = op.apply(x);
    const double rho = inner(ax, x);
    const double res = (ax - rho * x).norm();
    report.iterations = static_cast<std::size_t>(it);
    if (cfg.record_history) report.history.push_back({rho, res, 0.0, true});
    if (res <= cfg.tol) {
      report.converged = true;
      break;
    }
    Matrix next = (1.0 - cfg.damping) * (ax + sigma * x) + cfg.damping * x;
    const double nrm = next.norm();
    if (!(nrm > 0.0) || !std::isfinite(nrm)) {
      throw ConvergenceError("power_reference: iterate vanished or is not finite");
    }
    x = next / nrm;
  }
  finish_report(report, op, std::move(x));
  report.wall_seconds = seconds_since(start);
  return report;
}

EigenReport shift_invert_reference(const OperatorHandle& op, const ShiftInvertConfig& cfg) {
  const auto start = Clock::now();
  const GrowthParts parts = growth_parts(op);
  const Index n = op.rows();
  const double scale = std::max(1.0, op.nonnegative_shift());

  EigenReport report;
  report.method = "ShiftInvert";
  Matrix x = Matrix::Constant(n, n, 1.0 / static_cast<double>(n));
  for (long it = 0; it < cfg.max_iters; ++it) {
    const Matrix ax = op.apply(x);
    const double rho = inner(ax, x);
    const double res = (ax - rho * x).norm();
    report.iterations = static_cast<std::size_t>(it);
    if (cfg.record_history) report.history.push_back({rho, res, 0.0, true});
    if (res <= cfg.tol) {
      report.converged = true;
      break;
    }
    double bound = -std::numeric_limits<double>::infinity();
    for (Index j = 0; j < n; ++j) {
      for (Index i = 0; i < n; ++i) {
        if (x(i, j) > 0.0) bound = std::max(bound, ax(i, j) / x(i, j));
      }
    }
    const double sigma = bound + 1e-10 * scale;
    BandMatrix shifted = shifted_vectorized(parts, sigma);
    shifted.factorize();
    const Vector y = shifted.solve(Eigen::Map<const Vector>(x.data(), x.size()));
    Matrix next = Eigen::Map<const Matrix>(y.data(), n, n);
    if (next.sum() < 0.0) next = -next;
    const double nrm = next.norm();
    if (!(nrm > 0.0) || !std::isfinite(nrm)) {
      throw ConvergenceError("shift_invert_reference: iterate vanished or is not finite");
    }
    x = next / nrm;
  }
  finish_report(report, op, std::move(x));
  report.wall_seconds = seconds_since(start);
  return report;
}

FactorPair rneg_initial_factors(Index m, Index n, Index rank, std::uint64_t seed) {
  Rng rng(seed);
  Matrix u(m, rank);
  Matrix v(n, rank);
  for (Index j = 0; j < rank; ++j)
    for (Index i = 0; i < m; ++i) u(i, j) = rng.uniform();
  for (Index j = 0; j < rank; ++j)
    for (Index i = 0; i < n; ++i) v(i, j) = rng.uniform();
  const double s = (u * v.transpose()).norm();
  if (!(s > 0.0)) throw ConvergenceError("rneg_initial_factors: degenerate random start");
  u /= std::sqrt(s);
  v /= std::sqrt(s);
  return FactorPair(DenseMatrix(std::move(u)), DenseMatrix(std::move(v)));
}

namespace {

struct FactoredState {
  Matrix u;
  Matrix v;
  Matrix f;  // A(U V^T)
  double lambda = 0.0;
  Matrix du;  // P+_U(G_U)
  Matrix dv;  // P+_V(G_V)
  double norm_du = 0.0;
  double norm_dv = 0.0;
};

FactoredState evaluate(const OperatorHandle& op, Matrix u, Matrix v) {
  FactoredState s;
  s.f = op.apply_lowrank(u, v);
  const Matrix utu = u.transpose() * u;
  const Matrix vtv = v.transpose() * v;
  // trace(F^T U V^T) = trace((F V)^T U)
  const Matrix fv = s.f * v;
  s.lambda = inner(fv, u);
  const Matrix gu = fv - s.lambda * (u * vtv);
  const Matrix gv = s.f.transpose() * u - s.lambda * (v * utu);
  s.du = kernels::feasible_direction(u, gu);
  s.dv = kernels::feasible_direction(v, gv);
  s.norm_du = s.du.norm();
  s.norm_dv = s.dv.norm();
  if (!std::isfinite(s.lambda) || !std::isfinite(s.norm_du) || !std::isfinite(s.norm_dv)) {
    throw ConvergenceError("rneg_solve: non-finite gradient (lambda = " +
                           std::to_string(s.lambda) + ")");
  }
  s.u = std::move(u);
  s.v = std::move(v);
  return s;
}

// Largest h keeping every positive entry of W + h D nonnegative.
double admissible_step(const Matrix& w, const Matrix& d) {
  double h = std::numeric_limits<double>::infinity();
  for (Index j = 0; j < w.cols(); ++j) {
    for (Index i = 0; i < w.rows(); ++i) {
      if (w(i, j) > 0.0 && d(i, j) < 0.0) h = std::min(h, -w(i, j) / d(i, j));
    }
  }
  return h;
}

// W + h D with entries whose zero crossing lies within the step set to exactly 0.
Matrix advance(const Matrix& w, const Matrix& d, double h) {
  Matrix out = w + h * d;
  for (Index j = 0; j < w.cols(); ++j) {
    for (Index i = 0; i < w.rows(); ++i) {
      if (d(i, j) < 0.0 && w(i, j) <= -h * d(i, j) * (1.0 + 1e-12)) out(i, j) = 0.0;
    }
  }
  return out;
}

bool step_accepted(const FactoredState& current, const FactoredState& trial, BacktrackRule rule) {
  switch (rule) {
    case BacktrackRule::kBothNorms:
      return trial.norm_du <= current.norm_du && trial.norm_dv <= current.norm_dv;
    case BacktrackRule::kCombinedNorm:
      return trial.norm_du * trial.norm_du + trial.norm_dv * trial.norm_dv <=
             current.norm_du * current.norm_du + current.norm_dv * current.norm_dv;
  }
  return false;
}

}  // namespace

EigenReport rneg_solve(const OperatorHandle& op, const RNegConfig& cfg,
                       const std::optional<FactorPair>& init) {
  if (cfg.rank < 1 || cfg.rank > std::min(op.rows(), op.cols())) {
    throw DomainError("rneg_solve: rank must lie in [1, min(m, n)]");
  }
  if (!(cfg.h0 > 0.0) || !(cfg.tol > 0.0) || cfg.max_iters < 1) {
    throw DomainError("rneg_solve: h0, tol and max_iters must be positive");
  }
  if (!(cfg.beta_rej > 0.0 && cfg.beta_rej < 1.0) || !(cfg.beta_acc > 1.0)) {
    throw DomainError("rneg_solve: need 0 < beta_rej < 1 < beta_acc");
  }
  const auto start = Clock::now();
  const double h_cap = cfg.h_cap.value_or(cfg.h0);
  const double h_force = cfg.h_force.value_or(cfg.h0);
  if (h_cap < cfg.h0 || h_force < 0.0 || h_force > h_cap) {
    throw DomainError("rneg_solve: need h_force <= h_cap and h0 <= h_cap");
  }

  Matrix u0;
  Matrix v0;
  if (init) {
    if (init->rows() != op.rows() || init->cols() != op.cols() || init->rank() != cfg.rank) {
      throw ShapeError("rneg_solve: initial factors do not match operator and rank");
    }
    u0 = init->u().values();
    v0 = init->v().values();
    const double s = (u0 * v0.transpose()).norm();
    if (!(s > 0.0)) throw DomainError("rneg_solve: initial product is zero");
    u0 /= std::sqrt(s);
    v0 /= std::sqrt(s);
  } else {
    FactorPair p = rneg_initial_factors(op.rows(), op.cols(), cfg.rank, cfg.seed);
    u0 = p.u().values();
    v0 = p.v().values();
  }

  EigenReport report;
  report.method = "RNeg";
  FactoredState state = evaluate(op, std::move(u0), std::move(v0));
  double h = cfg.h0;
  double d_u = std::numeric_limits<double>::infinity();
  double d_v = std::numeric_limits<double>::infinity();
  long step = 0;
  bool stalled = false;

  while (std::min(d_u, d_v) > cfg.tol && step < cfg.max_iters) {
    ++step;
    const double h_max =
        std::min(admissible_step(state.u, state.du), admissible_step(state.v, state.dv));

    FactoredState trial;
    double h_step = 0.0;
    for (;;) {
      h_step = std::min(h, h_max);
      Matrix u = advance(state.u, state.du, h_step);
      Matrix v = advance(state.v, state.dv, h_step);
      const double s2 = ((u.transpose() * u) * (v.transpose() * v)).trace();
      if (!(s2 > 0.0) || !std::isfinite(s2)) {
        throw ConvergenceError("rneg_solve: factor product vanished or is not finite");
      }
      const double root_s = std::sqrt(std::sqrt(s2));
      u /= root_s;
      v /= root_s;
      trial = evaluate(op, std::move(u), std::move(v));
      const bool forced = h_force > 0.0 && h <= h_force;
      if (step_accepted(state, trial, cfg.backtrack) || forced) break;
      if (cfg.record_history) {
        report.history.push_back({trial.lambda, std::numeric_limits<double>::quiet_NaN(), h_step,
                                  false});
      }
      ++report.rejected_steps;
      h *= cfg.beta_rej;
      if (h_force > 0.0) h = std::max(h, h_force);
      if (h < cfg.h_min) {
        stalled = true;
        break;
      }
    }
    if (stalled) break;

    // A step cut short by h_max only moves a factor entry onto the boundary;
    // it says nothing about stationarity.
    if (h_step < h) {
      d_u = std::numeric_limits<double>::infinity();
      d_v = d_u;
    } else {
      d_u = (trial.u - state.u).norm();
      d_v = (trial.v - state.v).norm();
    }
    state = std::move(trial);
    if (cfg.record_history) {
      const Matrix x = state.u * state.v.transpose();
      report.history.push_back({state.lambda, (state.f - state.lambda * x).norm(), h_step, true});
    }
    h = std::min(cfg.beta_acc * h, h_cap);
  }

  report.iterations = static_cast<std::size_t>(step);
  report.converged = stalled || std::min(d_u, d_v) <= cfg.tol;
  report.d_u = d_u;
  report.d_v = d_v;
  Matrix x = state.u * state.v.transpose();
  report.factors = FactorPair(DenseMatrix(state.u), DenseMatrix(state.v));
  finish_report(report, op, std::move(x));
  report.wall_seconds = seconds_since(start);
  return report;
}

namespace {

// G(L R^T) = A(X) - rho X with rho = <A(X), X> / <X, X>, X = L R^T.
Matrix flow_on_factors(const OperatorHandle& op, const Matrix& left, const Matrix& right) {
  const Matrix x = left * right.transpose();
  const Matrix ax = op.apply_lowrank(left, right);
  const double xx = x.squaredNorm();
  const double rho = xx > 0.0 ? inner(ax, x) / xx : 0.0;
  return ax - rho * x;
}

// Formed explicitly: the r x r Gram expansion loses all digits below sqrt(eps).
double factored_distance(const PSIState& a, const PSIState& b) {
  return (a.u * a.s * a.v.transpose() - b.u * b.s * b.v.transpose()).norm();
}

}  // namespace

PSIState psi_step(const OperatorHandle& op, const PSIState& state, double h) {
  // K-step
  const Matrix k = state.u * state.s + h * flow_on_factors(op, state.u * state.s, state.v) * state.v;
  auto [u1, s_hat] = kernels::householder_qr(k);
  // S-step (backward in time)
  const Matrix g_s = flow_on_factors(op, u1 * s_hat, state.v);
  const Matrix s_tilde = s_hat - h * (u1.transpose() * g_s * state.v);
  // L-step
  const Matrix g_l = flow_on_factors(op, u1 * s_tilde, state.v);
  const Matrix l = state.v * s_tilde.transpose() + h * g_l.transpose() * u1;
  auto [v1, s1t] = kernels::householder_qr(l);
  Matrix s1 = s1t.transpose();
  const double sn = s1.norm();
  if (!(sn > 0.0) || !std::isfinite(sn)) {
    throw ConvergenceError("psi_solve: S vanished or is not finite");
  }
  s1 /= sn;
  return {std::move(u1), std::move(s1), std::move(v1)};
}

EigenReport psi_solve(const OperatorHandle& op, const PSIConfig& cfg,
                      const std::optional<PSIState>& init) {
  const Index m = op.rows();
  const Index n = op.cols();
  if (cfg.rank < 1 || cfg.rank > std::min(m, n)) {
    throw DomainError("psi_solve: rank must lie in [1, min(m, n)]");
  }
  if (!(cfg.h > 0.0) || !(cfg.tol > 0.0)) throw DomainError("psi_solve: h and tol must be positive");
  const auto start = Clock::now();

  PSIState state;
  if (init) {
    if (init->u.rows() != m || init->v.rows() != n || init->u.cols() != cfg.rank ||
        init->v.cols() != cfg.rank || init->s.rows() != cfg.rank || init->s.cols() != cfg.rank) {
      throw ShapeError("psi_solve: initial state does not match operator and rank");
    }
    state = *init;
    const double sn = state.s.norm();
    if (!(sn > 0.0)) throw DomainError("psi_solve: initial S is zero");
    state.s /= sn;
  } else {
    Rng rng(cfg.seed);
    Matrix u(m, cfg.rank);
    Matrix v(n, cfg.rank);
    for (Index j = 0; j < cfg.rank; ++j)
      for (Index i = 0; i < m; ++i) u(i, j) = rng.uniform();
    for (Index j = 0; j < cfg.rank; ++j)
      for (Index i = 0; i < n; ++i) v(i, j) = rng.uniform();
    auto [qu, ru] = kernels::householder_qr(u);
    auto [qv, rv] = kernels::householder_qr(v);
    state = {std::move(qu), Matrix(ru * rv.transpose()), std::move(qv)};
    state.s /= state.s.norm();
  }

  EigenReport report;
  report.method = "PSI";
  const double h = cfg.h;
  long step = 0;
  for (; step < cfg.max_steps; ++step) {
    PSIState next = psi_step(op, state, h);
    const double change = factored_distance(next, state);
    state = std::move(next);
    if (cfg.record_history) {
      const Matrix x = state.u * state.s * state.v.transpose();
      const Matrix ax = op.apply(x);
      const double rho = inner(ax, x);
      report.history.push_back({rho, (ax - rho * x).norm(), h, true});
    }
    if (change <= cfg.tol * h) {
      report.converged = true;
      ++step;
      break;
    }
  }
  report.iterations = static_cast<std::size_t>(step);
  finish_report(report, op, state.u * state.s * state.v.transpose());
  report.wall_seconds = seconds_since(start);
  return report;
}

}  // namespace nnlr
