#pragma once

// Restricted-isometry diagnostics.
//
// delta_r is the smallest delta with (1-delta)||x||^2 <= ||Phi x||^2 <= (1+delta)||x||^2
// for every x with at most r nonzeros, i.e. the largest spectral deviation
// max(lambda_max - 1, 1 - lambda_min) of Phi_T^* Phi_T over |T| = r.
// Checking every support is combinatorial, so exhaustive evaluation is
// guarded by a budget and Monte Carlo sampling gives a certified lower bound.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "cosamp/eigen.hpp"
#include "cosamp/error.hpp"
#include "cosamp/linalg.hpp"
#include "cosamp/operators.hpp"
#include "cosamp/parallel.hpp"
#include "cosamp/rng.hpp"

namespace cosamp {

struct RipMethod {
  enum class Kind { Exhaustive, MonteCarlo };
  Kind kind = Kind::Exhaustive;
  std::uint64_t trials = 0;
  std::uint64_t seed = 0;

  static RipMethod exhaustive() { return {Kind::Exhaustive, 0, 0}; }
  static RipMethod monte_carlo(std::uint64_t trials, std::uint64_t seed) { return {Kind::MonteCarlo, trials, seed}; }
};

struct RipEstimate {
  std::size_t r = 0;
  double delta_lower = 0.0;
  std::optional<double> delta_exact;
  RipMethod method;
  SupportSet worst_support;  // a support attaining delta_lower
};

inline constexpr std::uint64_t kDefaultRipBudget = 1'000'000;

/// C(n, r), saturating at UINT64_MAX.
inline std::uint64_t binomial(std::uint64_t n, std::uint64_t r) {
  if (r > n) return 0;
  r = std::min(r, n - r);
  unsigned __int128 acc = 1;
  for (std::uint64_t i = 1; i <= r; ++i) {
    acc = acc * (n - r + i) / i;
    if (acc > std::numeric_limits<std::uint64_t>::max()) return std::numeric_limits<std::uint64_t>::max();
  }
  return static_cast<std::uint64_t>(acc);
}

/// Lexicographic rank -> r-combination of [0, n).
inline std::vector<std::size_t> unrank_combination(std::uint64_t rank, std::size_t n, std::size_t r) {
  std::vector<std::size_t> out;
  out.reserve(r);
  std::size_t next = 0;
  for (std::size_t k = r; k > 0; --k) {
    for (;; ++next) {
      const std::uint64_t block = binomial(n - next - 1, k - 1);
      if (rank < block) break;
      rank -= block;
    }
    out.push_back(next++);
  }
  return out;
}

inline bool next_combination(std::vector<std::size_t>& c, std::size_t n) {
  const std::size_t r = c.size();
  for (std::size_t i = r; i-- > 0;) {
    if (c[i] < n - r + i) {
      ++c[i];
      for (std::size_t j = i + 1; j < r; ++j) c[j] = c[j - 1] + 1;
      return true;
    }
  }
  return false;
}

/// Full N x N Gram matrix Phi^* Phi (row-major), from the materialized operator.
class GramMatrix {
 public:
  explicit GramMatrix(const SamplingOperator& op) : n_(op.cols()) {
    const DenseMatrix phi = op.materialize();
    const std::size_t m = phi.rows();
    complex_.assign(n_ * n_, Scalar{});
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t a = 0; a < n_; ++a) {
        const Scalar ca = std::conj(phi(i, a));
        if (ca == Scalar{}) continue;
        for (std::size_t b = a; b < n_; ++b) complex_[a * n_ + b] += ca * phi(i, b);
      }
    }
    for (std::size_t a = 0; a < n_; ++a)
      for (std::size_t b = 0; b < a; ++b) complex_[a * n_ + b] = std::conj(complex_[b * n_ + a]);
    real_ = std::all_of(complex_.begin(), complex_.end(), [](const Scalar& z) { return z.imag() == 0.0; });
    if (real_) {
      realv_.reserve(complex_.size());
      for (const Scalar& z : complex_) realv_.push_back(z.real());
    }
  }

  std::size_t size() const noexcept { return n_; }
  bool is_real() const noexcept { return real_; }
  Scalar operator()(std::size_t a, std::size_t b) const { return complex_[a * n_ + b]; }

  /// Extreme eigenvalues of the principal submatrix on `idx`.
  EigenExtremes extremes(std::span<const std::size_t> idx) const {
    const std::size_t r = idx.size();
    if (real_) {
      std::vector<double> sub(r * r);
      for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < r; ++j) sub[i * r + j] = realv_[idx[i] * n_ + idx[j]];
      return hermitian_extremes<double>(sub, r);
    }
    std::vector<Scalar> sub(r * r);
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < r; ++j) sub[i * r + j] = complex_[idx[i] * n_ + idx[j]];
    return hermitian_extremes<Scalar>(sub, r);
  }

  /// max(lambda_max - 1, 1 - lambda_min) on the principal submatrix.
  double deviation(std::span<const std::size_t> idx) const {
    const auto e = extremes(idx);
    return std::max(e.max - 1.0, 1.0 - e.min);
  }

 private:
  std::size_t n_;
  std::vector<Scalar> complex_;
  std::vector<double> realv_;
  bool real_ = false;
};

namespace detail {

struct WorstSupport {
  double value = -std::numeric_limits<double>::infinity();
  std::vector<std::size_t> support;

  // Larger deviation wins; equal deviations keep the lexicographically smaller support.
  void offer(double v, const std::vector<std::size_t>& s) {
    if (v > value || (v == value && s < support)) {
      value = v;
      support = s;
    }
  }
};

inline std::string budget_message(std::size_t n, std::size_t r, std::uint64_t budget) {
  return "exhaustive delta_" + std::to_string(r) + " needs C(" + std::to_string(n) + "," + std::to_string(r) +
         ") = " + std::to_string(binomial(n, r)) + " supports, over the budget of " + std::to_string(budget) +
         "; use the Monte Carlo method instead";
}

inline double support_deviation(const SamplingOperator& op, const DenseMatrix& phi, std::span<const std::size_t> idx) {
  const std::size_t r = idx.size();
  std::vector<Scalar> sub(r * r);
  for (std::size_t a = 0; a < r; ++a) {
    for (std::size_t b = a; b < r; ++b) {
      Scalar acc{};
      for (std::size_t i = 0; i < op.rows(); ++i) acc += std::conj(phi(i, idx[a])) * phi(i, idx[b]);
      sub[a * r + b] = acc;
      sub[b * r + a] = std::conj(acc);
    }
  }
  const auto e = hermitian_extremes<Scalar>(sub, r);
  return std::max(e.max - 1.0, 1.0 - e.min);
}

}  // namespace detail

/// Exhaustive delta_r from a precomputed Gram matrix. Work is split into
/// rank ranges so the result does not depend on `jobs`.
inline RipEstimate exhaustive_rip(const GramMatrix& gram, std::size_t r, std::uint64_t budget = kDefaultRipBudget,
                                  unsigned jobs = 1) {
  const std::size_t n = gram.size();
  if (r > n) throw InvalidArgument("rip: r exceeds N");
  RipEstimate est;
  est.r = r;
  est.method = RipMethod::exhaustive();
  if (r == 0) {
    est.delta_exact = 0.0;
    est.worst_support = SupportSet(n);
    return est;
  }
  const std::uint64_t total = binomial(n, r);
  if (total > budget) {
    throw BudgetExceeded(detail::budget_message(n, r, budget));
  }
  const std::size_t chunks = std::max<std::uint64_t>(1, std::min<std::uint64_t>(total, 64));
  std::vector<detail::WorstSupport> partial(chunks);
  parallel_for(chunks, jobs, [&](std::size_t c) {
    const std::uint64_t begin = total * c / chunks;
    const std::uint64_t end = total * (c + 1) / chunks;
    if (begin == end) return;
    auto comb = unrank_combination(begin, n, r);
    for (std::uint64_t k = begin; k < end; ++k) {
      partial[c].offer(gram.deviation(comb), comb);
      if (k + 1 < end) next_combination(comb, n);
    }
  });
  detail::WorstSupport best;
  for (const auto& p : partial)
    if (!p.support.empty()) best.offer(p.value, p.support);
  est.delta_lower = best.value;
  est.delta_exact = best.value;
  est.worst_support = SupportSet::from_sorted(n, best.support);
  return est;
}

inline RipEstimate rip_estimate(const SamplingOperator& op, std::size_t r, const RipMethod& method,
                                std::uint64_t budget = kDefaultRipBudget, unsigned jobs = 1) {
  const std::size_t n = op.cols();
  if (r > n) throw InvalidArgument("rip: r exceeds N");
  if (method.kind == RipMethod::Kind::Exhaustive) {
    if (binomial(n, r) > budget) throw BudgetExceeded(detail::budget_message(n, r, budget));
    return exhaustive_rip(GramMatrix(op), r, budget, jobs);
  }
  RipEstimate est;
  est.r = r;
  est.method = method;
  if (r == 0 || method.trials == 0) {
    est.delta_lower = 0.0;
    est.worst_support = SupportSet(n);
    return est;
  }
  const DenseMatrix phi = op.materialize();
  std::vector<double> values(method.trials);
  std::vector<std::vector<std::size_t>> supports(method.trials);
  parallel_for(method.trials, jobs, [&](std::size_t t) {
    CounterRng rng(derive_seed(method.seed, t));
    auto idx = fisher_yates_prefix(n, r, rng);
    std::sort(idx.begin(), idx.end());
    values[t] = detail::support_deviation(op, phi, idx);
    supports[t] = std::move(idx);
  });
  detail::WorstSupport best;
  for (std::size_t t = 0; t < values.size(); ++t) best.offer(values[t], supports[t]);
  est.delta_lower = best.value;
  est.worst_support = SupportSet::from_sorted(n, best.support);
  return est;
}

/// Spectral norm of Phi_S^* Phi_T read off the Gram matrix.
inline double cross_gram_norm(const GramMatrix& gram, const SupportSet& s, const SupportSet& t) {
  if (s.empty() || t.empty()) return 0.0;
  // ||B|| with B = G[S, T]; eigenvalues of B^* B.
  const std::size_t p = s.size();
  const std::size_t q = t.size();
  std::vector<Scalar> btb(q * q);
  for (std::size_t a = 0; a < q; ++a)
    for (std::size_t b = 0; b < q; ++b) {
      Scalar acc{};
      for (std::size_t i = 0; i < p; ++i) acc += std::conj(gram(s[i], t[a])) * gram(s[i], t[b]);
      btb[a * q + b] = acc;
    }
  const auto e = hermitian_extremes<Scalar>(btb, q);
  return std::sqrt(std::max(0.0, e.max));
}

struct InequalityCheck {
  std::string name;
  double lhs = 0.0;
  double rhs = 0.0;
  bool holds() const { return lhs <= rhs + tolerance; }
  double slack() const { return rhs - lhs; }
  double tolerance = 1e-10;
};

struct RipConsequenceReport {
  double delta_r = 0.0;
  double delta_2r = 0.0;
  double delta_cr = 0.0;
  std::vector<InequalityCheck> checks;

  bool all_hold() const {
    return std::all_of(checks.begin(), checks.end(), [](const InequalityCheck& c) { return c.holds(); });
  }
  std::size_t violations() const {
    return static_cast<std::size_t>(
        std::count_if(checks.begin(), checks.end(), [](const InequalityCheck& c) { return !c.holds(); }));
  }
};

struct RipConsequenceInputs {
  std::size_t r = 2;
  std::size_t c = 3;
  std::vector<SupportSet> supports;    // |T| <= r each
  std::vector<SignalVector> signals;   // used for the cross-correlation and energy bounds
  std::uint64_t budget = kDefaultRipBudget;
  unsigned jobs = 1;
};

/// Evaluates the standard consequences of the restricted isometry inequalities
/// on one operator, with every delta computed exhaustively:
///  - singular values of Phi_T lie in [sqrt(1-delta_r), sqrt(1+delta_r)] for |T| <= r
///  - ||Phi_S^* Phi_T|| <= delta_r for disjoint S, T with |S|+|T| <= r (halves of each input support)
///  - ||Phi_T^* Phi x|_{T^c}|| <= delta_r ||x|_{T^c}|| when |T u supp x| <= r
///  - delta_{c r} <= c delta_{2r}
///  - ||Phi x|| <= sqrt(1+delta_r) (||x||_2 + ||x||_1 / sqrt(r)) for every input x
inline RipConsequenceReport check_rip_consequences(const SamplingOperator& op, const RipConsequenceInputs& in) {
  const GramMatrix gram(op);
  const std::size_t n = op.cols();
  RipConsequenceReport rep;
  rep.delta_r = *exhaustive_rip(gram, std::min(in.r, n), in.budget, in.jobs).delta_exact;
  rep.delta_2r = *exhaustive_rip(gram, std::min(2 * in.r, n), in.budget, in.jobs).delta_exact;
  rep.delta_cr = *exhaustive_rip(gram, std::min(in.c * in.r, n), in.budget, in.jobs).delta_exact;
  const double dr = rep.delta_r;

  for (const SupportSet& t : in.supports) {
    if (t.size() > in.r || t.empty()) continue;
    const auto e = gram.extremes(t.indices());
    const double smin = std::sqrt(std::max(0.0, e.min));
    const double smax = std::sqrt(std::max(0.0, e.max));
    rep.checks.push_back({"singular_lower", std::sqrt(std::max(0.0, 1.0 - dr)), smin});
    rep.checks.push_back({"singular_upper", smax, std::sqrt(1.0 + dr)});

    if (t.size() >= 2) {
      const std::size_t half = t.size() / 2;
      std::vector<std::size_t> a(t.begin(), t.begin() + static_cast<std::ptrdiff_t>(half));
      std::vector<std::size_t> b(t.begin() + static_cast<std::ptrdiff_t>(half), t.end());
      rep.checks.push_back({"approximate_orthogonality",
                            cross_gram_norm(gram, SupportSet::from_sorted(n, a), SupportSet::from_sorted(n, b)), dr});
    }
  }

  for (const SignalVector& x : in.signals) {
    for (const SupportSet& t : in.supports) {
      if (set_union(t, support_of(x)).size() > in.r) continue;
      const SignalVector tail = restrict_to(x, complement(t));
      const SampleVector phi_tail = op.apply(tail);
      const double lhs = norm2(op.adjoint_sub(t, phi_tail));
      rep.checks.push_back({"cross_correlation", lhs, dr * norm2(tail)});
    }
    const Norms nx = norms(x);
    rep.checks.push_back({"energy_bound", norm2(op.apply(x)),
                          std::sqrt(1.0 + dr) * (nx.l2 + nx.l1 / std::sqrt(static_cast<double>(in.r)))});
  }
  rep.checks.push_back({"higher_order_delta", rep.delta_cr, static_cast<double>(in.c) * rep.delta_2r});
  return rep;
}

}  // namespace cosamp
