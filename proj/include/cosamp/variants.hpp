#pragma once

// Alternative loop bodies sharing the driver in cosamp.hpp:
//  - residual: estimate the residual on Omega from v and add it to a^{k-1};
//  - prune-first: cut T down to s indices before the least-squares step;
//  - final polish: one more least-squares solve on the returned support.
// None of these carry a convergence guarantee; per-step audits are skipped.

#include <algorithm>
#include <cstddef>
#include <optional>
#include <utility>

#include "cosamp/cosamp.hpp"

namespace cosamp {

enum class VariantKind { Standard, ResidualApproximation, PruneBeforeEstimate };

inline const char* to_string(VariantKind v) {
  switch (v) {
    case VariantKind::Standard: return "standard";
    case VariantKind::ResidualApproximation: return "residual";
    case VariantKind::PruneBeforeEstimate: return "prune-first";
  }
  return "unknown";
}

/// b = Phi_Omega^+ v from a zero start, c = a^{k-1} + b, a^k = c_s.
inline RecoveryState residual_iteration(const RecoveryState& st, SignalVector proxy, const SamplingOperator& op,
                                        const SampleVector& u, const RecoveryConfig& cfg) {
  using detail::Clock;
  RecoveryState next;
  next.k = st.k + 1;
  next.y = std::move(proxy);

  auto t0 = Clock::now();
  next.omega = identify(next.y, cfg.identify_count(op.cols()));
  next.times.identify_us = detail::micros_since(t0);

  next.merged = next.omega;
  t0 = Clock::now();
  next.lsq = detail::estimate_on(op, next.omega, st.v, Coefficients(next.omega.size()), cfg.lsq, next.k);
  next.b_on_t = next.lsq.coefficients;
  next.times.estimate_us = detail::micros_since(t0);

  t0 = Clock::now();
  SignalVector c = st.a + estimate_vector(next);
  next.times.merge_us = detail::micros_since(t0);

  t0 = Clock::now();
  auto pruned = best_s_approx(c, cfg.prune_count());
  next.a = std::move(pruned.approx);
  next.support = std::move(pruned.support);
  next.times.prune_us = detail::micros_since(t0);

  t0 = Clock::now();
  next.v = u - op.apply_sub(next.support, gather(next.a, next.support));
  next.times.update_us = detail::micros_since(t0);
  return next;
}

/// Ranks T = Omega u supp(a^{k-1}) by |a_i| on the old support and |y_i| on
/// new indices, keeps the top `width` (lower index wins ties).
inline SupportSet surrogate_prune(const SupportSet& merged, const SupportSet& old_support, const SignalVector& a,
                                  const SignalVector& y, std::size_t width) {
  SignalVector score(a.size());
  for (std::size_t i : merged) score[i] = old_support.contains(i) ? std::abs(a[i]) : std::abs(y[i]);
  auto idx = top_indices(score.entries(), width);
  std::sort(idx.begin(), idx.end());
  return SupportSet::from_sorted(a.size(), std::move(idx));
}

inline RecoveryState prune_first_iteration(const RecoveryState& st, SignalVector proxy, const SamplingOperator& op,
                                           const SampleVector& u, const RecoveryConfig& cfg) {
  using detail::Clock;
  RecoveryState next;
  next.k = st.k + 1;
  next.y = std::move(proxy);

  auto t0 = Clock::now();
  next.omega = identify(next.y, cfg.identify_count(op.cols()));
  next.times.identify_us = detail::micros_since(t0);

  t0 = Clock::now();
  const SupportSet t_full = merge_support(next.omega, st.support);
  next.times.merge_us = detail::micros_since(t0);

  t0 = Clock::now();
  next.merged = surrogate_prune(t_full, st.support, st.a, next.y, cfg.prune_count());
  next.times.prune_us = detail::micros_since(t0);

  t0 = Clock::now();
  const Coefficients z0 = detail::warm_start_iterate(st, next.merged, cfg.lsq.warm_start);
  next.lsq = detail::estimate_on(op, next.merged, u, z0, cfg.lsq, next.k);
  next.b_on_t = next.lsq.coefficients;
  auto kept = best_s_approx(estimate_vector(next), cfg.prune_count());
  next.a = std::move(kept.approx);
  next.support = std::move(kept.support);
  next.times.estimate_us = detail::micros_since(t0);

  t0 = Clock::now();
  next.v = u - op.apply_sub(next.support, gather(next.a, next.support));
  next.times.update_us = detail::micros_since(t0);
  return next;
}

inline RecoveryReport recover_residual_variant(const SamplingOperator& op, const SampleVector& u,
                                               RecoveryConfig cfg, const std::optional<Truth>& truth = std::nullopt) {
  cfg.record_diagnostics = false;
  return detail::run_loop(op, u, cfg, truth, [&](const RecoveryState& st, SignalVector proxy) {
    return residual_iteration(st, std::move(proxy), op, u, cfg);
  });
}

inline RecoveryReport recover_prune_first_variant(const SamplingOperator& op, const SampleVector& u,
                                                  RecoveryConfig cfg,
                                                  const std::optional<Truth>& truth = std::nullopt) {
  cfg.record_diagnostics = false;
  return detail::run_loop(op, u, cfg, truth, [&](const RecoveryState& st, SignalVector proxy) {
    return prune_first_iteration(st, std::move(proxy), op, u, cfg);
  });
}

/// Re-solves least squares exactly on supp(a).
inline SignalVector final_polish(const SamplingOperator& op, const SampleVector& u, const SignalVector& a) {
  if (a.size() != op.cols()) throw DimensionError("approximation length does not match operator columns");
  const SupportSet t = support_of(a);
  return embed(direct_solve(op, t, u).coefficients, t);
}

inline RecoveryReport recover_with(VariantKind kind, const SamplingOperator& op, const SampleVector& u,
                                   const RecoveryConfig& cfg, bool polish,
                                   const std::optional<Truth>& truth = std::nullopt) {
  RecoveryReport rep;
  switch (kind) {
    case VariantKind::Standard: rep = recover(op, u, cfg, truth); break;
    case VariantKind::ResidualApproximation: rep = recover_residual_variant(op, u, cfg, truth); break;
    case VariantKind::PruneBeforeEstimate: rep = recover_prune_first_variant(op, u, cfg, truth); break;
  }
  if (polish && !rep.support.empty()) {
    rep.approximation = final_polish(op, u, rep.approximation);
    rep.support = support_of(rep.approximation);
  }
  return rep;
}

}  // namespace cosamp
