#pragma once

// The CoSaMP recovery loop: proxy, identify, merge, estimate, prune, update.
//
// Iterates are s-sparse. Estimation always solves against the original
// samples u; the residual-based variant lives in variants.hpp.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "cosamp/error.hpp"
#include "cosamp/linalg.hpp"
#include "cosamp/lsq.hpp"
#include "cosamp/operators.hpp"

namespace cosamp {

/// Any rule that is set may stop the loop; the first one to fire wins.
struct HaltingRule {
  std::optional<std::size_t> fixed_iterations;
  std::optional<double> sample_norm;     // epsilon: stop once ||v|| <= epsilon
  std::optional<double> proxy_inf_norm;  // eta: stop once ||y||_inf <= eta / sqrt(2s)

  static HaltingRule fixed(std::size_t k) { return {k, std::nullopt, std::nullopt}; }
  static HaltingRule samples(double eps) { return {std::nullopt, eps, std::nullopt}; }
  static HaltingRule proxy(double eta) { return {std::nullopt, std::nullopt, eta}; }

  HaltingRule operator|(const HaltingRule& other) const {
    HaltingRule r = *this;
    if (other.fixed_iterations) r.fixed_iterations = other.fixed_iterations;
    if (other.sample_norm) r.sample_norm = other.sample_norm;
    if (other.proxy_inf_norm) r.proxy_inf_norm = other.proxy_inf_norm;
    return r;
  }
};

enum class HaltReason { None, FixedIterations, SampleNorm, ProxyInfinityNorm, MaxIterations };

inline const char* to_string(HaltReason r) {
  switch (r) {
    case HaltReason::None: return "none";
    case HaltReason::FixedIterations: return "fixed_iterations";
    case HaltReason::SampleNorm: return "sample_norm";
    case HaltReason::ProxyInfinityNorm: return "proxy_inf_norm";
    case HaltReason::MaxIterations: return "max_iterations";
  }
  return "unknown";
}

struct RecoveryConfig {
  std::size_t s = 1;
  HaltingRule halting;
  std::optional<std::size_t> max_iterations;  // 6(s+1) when unset
  LsqConfig lsq;
  bool record_diagnostics = false;
  std::optional<std::size_t> identify_width;  // min(2s, N) when unset
  std::optional<std::size_t> prune_width;     // s when unset

  std::size_t iteration_cap() const { return max_iterations.value_or(6 * (s + 1)); }
  std::size_t identify_count(std::size_t n) const { return identify_width.value_or(std::min(2 * s, n)); }
  std::size_t prune_count() const { return prune_width.value_or(s); }
};

/// Throws InvalidArgument on unusable settings; returns soft warnings.
inline std::vector<std::string> validate(const RecoveryConfig& cfg, std::size_t n) {
  if (cfg.s == 0) throw InvalidArgument("sparsity s must be at least 1");
  if (cfg.max_iterations && *cfg.max_iterations == 0) throw InvalidArgument("max_iterations must be positive");
  if (cfg.halting.sample_norm && !(*cfg.halting.sample_norm >= 0.0))
    throw InvalidArgument("sample-norm threshold must be nonnegative");
  if (cfg.halting.proxy_inf_norm && !(*cfg.halting.proxy_inf_norm >= 0.0))
    throw InvalidArgument("proxy threshold must be nonnegative");
  if (cfg.identify_count(n) > n)
    throw InvalidArgument("identification width " + std::to_string(cfg.identify_count(n)) + " exceeds N = " +
                          std::to_string(n));
  if (cfg.prune_count() == 0 || cfg.prune_count() > n) throw InvalidArgument("pruning width must be in [1, N]");
  if (cfg.lsq.iterations == 0 && cfg.lsq.solver != LsqSolver::DirectReference)
    throw InvalidArgument("least-squares iteration count must be positive");
  std::vector<std::string> warnings;
  if (4 * cfg.s > n) warnings.push_back("4s exceeds N; recovery guarantees do not apply");
  return warnings;
}

struct StepTimes {
  double proxy_us = 0.0;
  double identify_us = 0.0;
  double merge_us = 0.0;
  double estimate_us = 0.0;
  double prune_us = 0.0;
  double update_us = 0.0;

  double total_us() const { return proxy_us + identify_us + merge_us + estimate_us + prune_us + update_us; }
};

struct RecoveryState {
  std::size_t k = 0;
  SignalVector a;         // current approximation a^k
  SupportSet support;     // supp(a^k)
  SampleVector v;         // u - Phi a^k
  SignalVector y;         // proxy Phi^* v^{k-1} formed during iteration k
  SupportSet omega;       // identified components
  SupportSet merged;      // T
  Coefficients b_on_t;    // least-squares estimate, ordered as T
  LsqResult lsq;          // solver bookkeeping for the estimate
  StepTimes times;
};

inline RecoveryState initial_state(const SamplingOperator& op, const SampleVector& u) {
  if (u.size() != op.rows()) throw DimensionError("sample vector length does not match operator rows");
  RecoveryState st;
  st.a = SignalVector(op.cols());
  st.support = SupportSet(op.cols());
  st.v = u;
  st.y = SignalVector(op.cols());
  st.omega = SupportSet(op.cols());
  st.merged = SupportSet(op.cols());
  return st;
}

/// The least-squares estimate b as a full-length vector (zero off T).
inline SignalVector estimate_vector(const RecoveryState& st) { return embed(st.b_on_t, st.merged); }

/// Omega = supp(y_{width}), lexicographic ties.
inline SupportSet identify(const SignalVector& y, std::size_t width) {
  if (width > y.size()) {
    throw InvalidArgument("identification width " + std::to_string(width) + " exceeds N = " + std::to_string(y.size()));
  }
  return best_s_approx(y, width).support;
}

inline SupportSet merge_support(const SupportSet& omega, const SupportSet& prev) { return set_union(omega, prev); }

namespace detail {

using Clock = std::chrono::steady_clock;

inline double micros_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::micro>(Clock::now() - t0).count();
}

inline Coefficients warm_start_iterate(const RecoveryState& st, const SupportSet& t, WarmStart ws) {
  if (ws == WarmStart::ZeroVector) return Coefficients(t.size());
  return gather(st.a, t);
}

/// Least-squares on T with the iteration index attached to any failure.
inline LsqResult estimate_on(const SamplingOperator& op, const SupportSet& t, const SampleVector& rhs,
                             const Coefficients& z0, const LsqConfig& cfg, std::size_t k) {
  try {
    if (t.size() > op.rows() && cfg.solver != LsqSolver::DirectReference) {
      // Iterative solvers cannot detect rank deficiency; check the Gram matrix first.
      const auto eig = hermitian_eigenvalues(sub_gram(op, t), t.size());
      if (!(eig.front() > kRankTolerance)) {
        throw SolverError("merged support has " + std::to_string(t.size()) + " indices but only " +
                              std::to_string(op.rows()) + " samples; smallest Gram eigenvalue " +
                              std::to_string(eig.front()),
                          eig.front());
      }
    }
    return solve_least_squares(op, t, rhs, z0, cfg);
  } catch (SolverError& err) {
    err.set_iteration(k);
    throw;
  }
}

}  // namespace detail

/// Completes iteration k+1 given the proxy y = Phi^* v already formed from the current state.
inline RecoveryState complete_iteration(const RecoveryState& st, SignalVector proxy, const SamplingOperator& op,
                                        const SampleVector& u, const RecoveryConfig& cfg) {
  using detail::Clock;
  RecoveryState next;
  next.k = st.k + 1;
  next.times = {};
  next.y = std::move(proxy);

  auto t0 = Clock::now();
  next.omega = identify(next.y, cfg.identify_count(op.cols()));
  next.times.identify_us = detail::micros_since(t0);

  t0 = Clock::now();
  next.merged = merge_support(next.omega, st.support);
  next.times.merge_us = detail::micros_since(t0);

  t0 = Clock::now();
  const Coefficients z0 = detail::warm_start_iterate(st, next.merged, cfg.lsq.warm_start);
  next.lsq = detail::estimate_on(op, next.merged, u, z0, cfg.lsq, next.k);
  next.b_on_t = next.lsq.coefficients;
  next.times.estimate_us = detail::micros_since(t0);

  t0 = Clock::now();
  auto pruned = best_s_approx(estimate_vector(next), cfg.prune_count());
  next.a = std::move(pruned.approx);
  next.support = std::move(pruned.support);
  next.times.prune_us = detail::micros_since(t0);

  t0 = Clock::now();
  next.v = u - op.apply_sub(next.support, gather(next.a, next.support));
  next.times.update_us = detail::micros_since(t0);
  return next;
}

/// One full iteration: proxy formation followed by complete_iteration.
inline RecoveryState cosamp_iteration(const RecoveryState& st, const SamplingOperator& op, const SampleVector& u,
                                      const RecoveryConfig& cfg) {
  const auto t0 = detail::Clock::now();
  SignalVector proxy = op.adjoint(st.v);
  const double proxy_us = detail::micros_since(t0);
  RecoveryState next = complete_iteration(st, std::move(proxy), op, u, cfg);
  next.times.proxy_us = proxy_us;
  return next;
}

inline bool sample_norm_fires(double v_norm, double eps) { return v_norm <= eps; }

inline bool proxy_fires(double y_inf, double eta, std::size_t s) {
  return y_inf <= eta / std::sqrt(2.0 * static_cast<double>(s));
}

struct HaltDecision {
  bool halt = false;
  HaltReason reason = HaltReason::None;
};

/// Evaluates the rule on a state. The proxy test reads state.y, which is
/// only meaningful once an iteration has formed it (k >= 1).
inline HaltDecision check_halt(const RecoveryState& st, const HaltingRule& rule, std::size_t s) {
  if (rule.fixed_iterations && st.k >= *rule.fixed_iterations) return {true, HaltReason::FixedIterations};
  if (rule.sample_norm && sample_norm_fires(norm2(st.v), *rule.sample_norm)) return {true, HaltReason::SampleNorm};
  if (rule.proxy_inf_norm && st.k >= 1 && proxy_fires(norm_inf(st.y), *rule.proxy_inf_norm, s))
    return {true, HaltReason::ProxyInfinityNorm};
  return {};
}

/// Inequality audit for one iteration against a planted truth.
struct StepCheck {
  std::string name;
  double lhs = 0.0;
  double rhs = 0.0;
  bool holds(double slack = 1e-10) const { return lhs <= rhs + slack * (1.0 + std::abs(rhs)); }
  double margin() const { return rhs - lhs; }
};

struct IterationAudit {
  std::size_t k = 0;
  double residual_norm = 0.0;  // ||x - a^{k-1}||
  std::vector<StepCheck> checks;

  bool all_hold() const {
    for (const auto& c : checks)
      if (!c.holds()) return false;
    return true;
  }
};

/// Evaluates the per-step inequalities of the sparse-case error analysis for
/// the iteration that produced `next` from `prev`. `x` is the planted s-sparse
/// signal and `e_norm` the noise norm. When the estimate came from an
/// iterative solver the estimation bound includes its extra r and e terms.
inline IterationAudit iteration_diagnostics(const RecoveryState& prev, const RecoveryState& next,
                                            const SamplingOperator& op, const SampleVector& u, const SignalVector& x,
                                            double e_norm, const LsqConfig& lsq) {
  IterationAudit audit;
  audit.k = next.k;
  const SignalVector r = x - prev.a;
  const double rn = norm2(r);
  audit.residual_norm = rn;
  const SignalVector b = estimate_vector(next);
  const double r_off_omega = norm2(restrict_to(r, complement(next.omega)));
  const double x_off_t = norm2(restrict_to(x, complement(next.merged)));
  const double x_minus_b = distance2(x, b);

  audit.checks.push_back({"identification", r_off_omega, 0.2223 * rn + 2.34 * e_norm});
  audit.checks.push_back({"support_merger", x_off_t, r_off_omega});
  if (lsq.solver == LsqSolver::DirectReference) {
    audit.checks.push_back({"estimation", x_minus_b, 1.112 * x_off_t + 1.06 * e_norm});
  } else {
    audit.checks.push_back({"estimation", x_minus_b, 1.112 * x_off_t + 0.0022 * rn + 1.062 * e_norm});
  }
  audit.checks.push_back({"pruning", distance2(x, next.a), 2.0 * x_minus_b});
  audit.checks.push_back({"iteration_invariant", distance2(x, next.a), 0.5 * rn + 7.5 * e_norm});
  if (lsq.solver != LsqSolver::DirectReference && lsq.warm_start == WarmStart::CurrentApproximation) {
    try {
      const LsqResult exact = direct_solve(op, next.merged, u);
      const double init_gap = distance2(prev.a, embed(exact.coefficients, next.merged));
      audit.checks.push_back({"initial_iterate", init_gap, 2.112 * rn + 1.06 * e_norm});
    } catch (const SolverError&) {
      // No exact least-squares solution to compare against.
    }
  }
  return audit;
}

struct TraceRow {
  std::size_t k = 0;
  double v_norm = 0.0;
  double y_inf = 0.0;
  double err_l2 = std::numeric_limits<double>::quiet_NaN();
  double err_linf = std::numeric_limits<double>::quiet_NaN();
  StepTimes times;
  std::size_t lsq_iterations = 0;
  bool lsq_diverged = false;
};

struct RecoveryReport {
  SignalVector approximation;
  SupportSet support;
  std::size_t iterations_run = 0;
  HaltReason halt_reason = HaltReason::None;
  std::vector<TraceRow> trace;
  std::vector<IterationAudit> audits;  // filled when diagnostics are requested with a truth
  std::vector<std::string> warnings;
  std::size_t lsq_divergences = 0;
};

/// Planted truth for error tracking and per-step audits.
struct Truth {
  SignalVector x;
  double noise_norm = 0.0;
};

namespace detail {

template <class StepFn>
RecoveryReport run_loop(const SamplingOperator& op, const SampleVector& u, const RecoveryConfig& cfg,
                        const std::optional<Truth>& truth, StepFn&& step) {
  RecoveryReport report;
  report.warnings = validate(cfg, op.cols());
  if (truth && truth->x.size() != op.cols()) throw DimensionError("truth length does not match operator columns");
  RecoveryState st = initial_state(op, u);
  const std::size_t cap = cfg.iteration_cap();

  auto finish = [&](HaltReason why) {
    report.approximation = st.a;
    report.support = st.support;
    report.iterations_run = st.k;
    report.halt_reason = why;
    return report;
  };

  if (auto d = check_halt(st, cfg.halting, cfg.s); d.halt) return finish(d.reason);
  for (;;) {
    const auto t0 = Clock::now();
    SignalVector proxy = op.adjoint(st.v);
    const double proxy_us = micros_since(t0);
    // The proxy for iteration k+1 is the one the proxy rule inspects; halting
    // here keeps a^k and does not count the partial iteration.
    if (cfg.halting.proxy_inf_norm && proxy_fires(norm_inf(proxy), *cfg.halting.proxy_inf_norm, cfg.s))
      return finish(HaltReason::ProxyInfinityNorm);

    RecoveryState next = step(st, std::move(proxy));
    next.times.proxy_us = proxy_us;

    TraceRow row;
    row.k = next.k;
    row.v_norm = norm2(next.v);
    row.y_inf = norm_inf(next.y);
    row.times = next.times;
    row.lsq_iterations = next.lsq.iterations_used;
    row.lsq_diverged = next.lsq.diverged;
    if (next.lsq.diverged) ++report.lsq_divergences;
    if (truth) {
      const Norms en = norms(truth->x - next.a);
      row.err_l2 = en.l2;
      row.err_linf = en.linf;
      if (cfg.record_diagnostics)
        report.audits.push_back(iteration_diagnostics(st, next, op, u, truth->x, truth->noise_norm, cfg.lsq));
    }
    report.trace.push_back(row);
    st = std::move(next);

    if (cfg.halting.fixed_iterations && st.k >= *cfg.halting.fixed_iterations)
      return finish(HaltReason::FixedIterations);
    if (cfg.halting.sample_norm && sample_norm_fires(row.v_norm, *cfg.halting.sample_norm))
      return finish(HaltReason::SampleNorm);
    if (st.k >= cap) return finish(HaltReason::MaxIterations);
  }
}

}  // namespace detail

/// Runs the loop until a halting rule fires or the iteration cap is reached.
/// Returns the s-sparse iterate a^k.
inline RecoveryReport recover(const SamplingOperator& op, const SampleVector& u, const RecoveryConfig& cfg,
                              const std::optional<Truth>& truth = std::nullopt) {
  return detail::run_loop(op, u, cfg, truth, [&](const RecoveryState& st, SignalVector proxy) {
    return complete_iteration(st, std::move(proxy), op, u, cfg);
  });
}

}  // namespace cosamp
