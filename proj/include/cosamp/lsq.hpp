#pragma once

// Least-squares estimation on a column submatrix A = Phi_T.
//
// The iterative solvers only touch A through apply_sub / adjoint_sub, two
// submatrix actions per iteration. The direct solver materializes the Gram
// matrix and exists as a reference for tests.

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "cosamp/eigen.hpp"
#include "cosamp/error.hpp"
#include "cosamp/linalg.hpp"
#include "cosamp/operators.hpp"

namespace cosamp {

enum class LsqSolver { Richardson, ConjugateGradient, DirectReference };
enum class WarmStart { ZeroVector, CurrentApproximation };

inline const char* to_string(LsqSolver s) {
  switch (s) {
    case LsqSolver::Richardson: return "richardson";
    case LsqSolver::ConjugateGradient: return "cg";
    case LsqSolver::DirectReference: return "direct";
  }
  return "unknown";
}

struct LsqConfig {
  LsqSolver solver = LsqSolver::ConjugateGradient;
  std::size_t iterations = 3;
  WarmStart warm_start = WarmStart::CurrentApproximation;
};

struct LsqResult {
  Coefficients coefficients;  // ordered as T
  std::size_t iterations_used = 0;
  double residual_samples_norm = 0.0;  // ||u - A z||
  bool diverged = false;               // residual grew more than 10x over the run
};

namespace detail {

inline void require_lsq_shapes(const SamplingOperator& op, const SupportSet& t, const SampleVector& u,
                               std::span<const Scalar> z0) {
  if (u.size() != op.rows()) throw DimensionError("least squares: sample length != m");
  if (t.ambient() != op.cols()) throw DimensionError("least squares: support ambient != N");
  if (z0.size() != t.size()) throw DimensionError("least squares: initial iterate length != |T|");
}

inline double residual_norm(const SampleVector& u, const SampleVector& az) { return norm2(u - az); }

}  // namespace detail

/// Richardson iteration z <- A^*u - (A^*A - I) z, `iters` times.
inline LsqResult richardson_solve(const SamplingOperator& op, const SupportSet& t, const SampleVector& u,
                                  std::span<const Scalar> z0, std::size_t iters) {
  detail::require_lsq_shapes(op, t, u, z0);
  if (iters == 0) throw InvalidArgument("least squares needs at least one iteration");
  LsqResult res;
  res.coefficients.assign(z0.begin(), z0.end());
  if (t.empty()) {
    res.residual_samples_norm = norm2(u);
    return res;
  }
  const Coefficients atu = op.adjoint_sub(t, u);
  Coefficients& z = res.coefficients;
  double first_residual = -1.0;
  for (std::size_t l = 0; l < iters; ++l) {
    const SampleVector az = op.apply_sub(t, z);
    if (first_residual < 0.0) first_residual = detail::residual_norm(u, az);
    const Coefficients ataz = op.adjoint_sub(t, az);
    for (std::size_t k = 0; k < z.size(); ++k) z[k] = atu[k] - (ataz[k] - z[k]);
    ++res.iterations_used;
  }
  res.residual_samples_norm = detail::residual_norm(u, op.apply_sub(t, z));
  res.diverged = res.residual_samples_norm > 10.0 * first_residual && first_residual > 0.0;
  return res;
}

/// Conjugate gradient on A^*A z = A^*u (CGNR), never forming A^*A.
inline LsqResult cg_solve(const SamplingOperator& op, const SupportSet& t, const SampleVector& u,
                          std::span<const Scalar> z0, std::size_t iters) {
  detail::require_lsq_shapes(op, t, u, z0);
  if (iters == 0) throw InvalidArgument("least squares needs at least one iteration");
  LsqResult res;
  res.coefficients.assign(z0.begin(), z0.end());
  if (t.empty()) {
    res.residual_samples_norm = norm2(u);
    return res;
  }
  Coefficients& z = res.coefficients;
  SampleVector sample_residual = u - op.apply_sub(t, z);
  const double first_residual = norm2(sample_residual);
  Coefficients g = op.adjoint_sub(t, sample_residual);  // normal-equation residual
  Coefficients p = g;
  double gg = 0.0;
  for (const Scalar& c : g) gg += std::norm(c);

  for (std::size_t l = 0; l < iters && gg > 0.0; ++l) {
    const SampleVector q = op.apply_sub(t, p);
    const double q_norm = norm2(q);
    const double qq = q_norm * q_norm;
    if (!(qq > 0.0)) break;
    const double alpha = gg / qq;
    for (std::size_t k = 0; k < z.size(); ++k) z[k] += alpha * p[k];
    for (std::size_t i = 0; i < sample_residual.size(); ++i) sample_residual[i] -= alpha * q[i];
    g = op.adjoint_sub(t, sample_residual);
    double gg_next = 0.0;
    for (const Scalar& c : g) gg_next += std::norm(c);
    const double beta = gg_next / gg;
    for (std::size_t k = 0; k < p.size(); ++k) p[k] = g[k] + beta * p[k];
    gg = gg_next;
    ++res.iterations_used;
  }
  res.residual_samples_norm = norm2(sample_residual);
  res.diverged = first_residual > 0.0 && res.residual_samples_norm > 10.0 * first_residual;
  return res;
}

/// Gram matrix Phi_T^* Phi_T (row-major |T| x |T|), built column by column from submatrix actions.
inline std::vector<Scalar> sub_gram(const SamplingOperator& op, const SupportSet& t) {
  const std::size_t k = t.size();
  std::vector<Scalar> g(k * k);
  Coefficients unit(k);
  for (std::size_t j = 0; j < k; ++j) {
    std::fill(unit.begin(), unit.end(), Scalar{});
    unit[j] = 1.0;
    const Coefficients col = op.adjoint_sub(t, op.apply_sub(t, unit));
    for (std::size_t i = 0; i < k; ++i) g[i * k + j] = col[i];
  }
  for (std::size_t i = 0; i < k; ++i) {  // symmetrize away rounding
    g[i * k + i] = g[i * k + i].real();
    for (std::size_t j = i + 1; j < k; ++j) {
      const Scalar avg = 0.5 * (g[i * k + j] + std::conj(g[j * k + i]));
      g[i * k + j] = avg;
      g[j * k + i] = std::conj(avg);
    }
  }
  return g;
}

inline constexpr double kRankTolerance = 1e-12;

/// z = (A^*A)^{-1} A^*u by Cholesky on the explicit Gram matrix.
inline LsqResult direct_solve(const SamplingOperator& op, const SupportSet& t, const SampleVector& u) {
  const Coefficients empty(t.size());
  detail::require_lsq_shapes(op, t, u, empty);
  LsqResult res;
  if (t.empty()) {
    res.residual_samples_norm = norm2(u);
    return res;
  }
  auto g = sub_gram(op, t);
  const auto eig = hermitian_eigenvalues(g, t.size());
  if (!(eig.front() > kRankTolerance)) {
    throw SolverError("Phi_T is numerically rank deficient: smallest Gram eigenvalue " +
                          std::to_string(eig.front()) + " with |T| = " + std::to_string(t.size()),
                      eig.front());
  }
  res.coefficients = cholesky_solve(std::move(g), t.size(), op.adjoint_sub(t, u));
  res.iterations_used = 1;
  res.residual_samples_norm = detail::residual_norm(u, op.apply_sub(t, res.coefficients));
  return res;
}

/// Dispatch on the configured solver. Direct ignores z0 and the iteration count.
inline LsqResult solve_least_squares(const SamplingOperator& op, const SupportSet& t, const SampleVector& u,
                                     std::span<const Scalar> z0, const LsqConfig& cfg) {
  switch (cfg.solver) {
    case LsqSolver::Richardson: return richardson_solve(op, t, u, z0, cfg.iterations);
    case LsqSolver::ConjugateGradient: return cg_solve(op, t, u, z0, cfg.iterations);
    case LsqSolver::DirectReference: return direct_solve(op, t, u);
  }
  throw InvalidArgument("unknown least-squares solver");
}

}  // namespace cosamp
