#pragma once

// Test-signal generators and the error functionals used to state recovery
// guarantees: unrecoverable energy, noise folding, magnitude bands, SNR.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <numbers>
#include <optional>
#include <vector>

#include "cosamp/error.hpp"
#include "cosamp/linalg.hpp"
#include "cosamp/operators.hpp"
#include "cosamp/rng.hpp"

namespace cosamp {

/// Magnitudes of the s nonzeros before signs and placement: flat (all 1),
/// exponential (alpha^i, i = 0..s-1) or caller supplied.
struct MagnitudeLaw {
  enum class Kind { Flat, Exponential, Custom } kind = Kind::Flat;
  double alpha = 0.5;
  std::vector<double> custom;

  static MagnitudeLaw flat() { return {}; }
  static MagnitudeLaw exponential(double alpha) { return {Kind::Exponential, alpha, {}}; }
  static MagnitudeLaw values(std::vector<double> v) { return {Kind::Custom, 0.0, std::move(v)}; }
};

/// s-sparse real signal: magnitudes from `law`, uniformly random positions and
/// random signs, all drawn from one counter stream keyed by `seed`.
inline SignalVector make_sparse(std::size_t n, std::size_t s, const MagnitudeLaw& law, std::uint64_t seed) {
  if (s > n) throw InvalidArgument("sparsity exceeds signal length");
  std::vector<double> mags(s, 1.0);
  if (law.kind == MagnitudeLaw::Kind::Exponential) {
    if (!(law.alpha > 0.0)) throw InvalidArgument("exponential decay rate must be positive");
    for (std::size_t i = 0; i < s; ++i) mags[i] = std::pow(law.alpha, static_cast<double>(i));
  } else if (law.kind == MagnitudeLaw::Kind::Custom) {
    if (law.custom.size() != s) throw InvalidArgument("custom magnitude list must have s entries");
    for (double m : law.custom)
      if (!(m > 0.0) || !std::isfinite(m)) throw InvalidArgument("custom magnitudes must be positive and finite");
    mags = law.custom;
  }
  CounterRng rng(seed);
  const auto positions = fisher_yates_prefix(n, s, rng);
  SignalVector x(n);
  for (std::size_t i = 0; i < s; ++i) {
    const double sign = (rng.next_u64() >> 63) ? -1.0 : 1.0;
    x[positions[i]] = sign * mags[i];
  }
  return x;
}

struct CompressibleSpec {
  double p = 1.0;
  double radius = 1.0;  // R
  std::size_t n = 0;
  std::uint64_t sign_seed = 0;
  std::uint64_t permutation_seed = 0;

  void validate() const {
    if (!(p > 0.0 && p <= 1.0)) throw InvalidArgument("compressibility exponent p must lie in (0, 1]");
    if (!(radius > 0.0) || !std::isfinite(radius)) throw InvalidArgument("magnitude R must be positive");
    if (n == 0) throw InvalidArgument("signal length must be positive");
  }
  /// (1/p - 1)^{-1}; infinite at p = 1.
  double c_p() const { return p == 1.0 ? std::numeric_limits<double>::infinity() : 1.0 / (1.0 / p - 1.0); }
  /// (2/p - 1)^{-1/2}.
  double d_p() const { return 1.0 / std::sqrt(2.0 / p - 1.0); }
};

/// Magnitudes exactly R i^{-1/p} for ranks i = 1..N (the extreme of the class),
/// then random signs and a random permutation.
inline SignalVector make_compressible(const CompressibleSpec& spec) {
  spec.validate();
  CounterRng signs(spec.sign_seed);
  CounterRng perm_rng(spec.permutation_seed);
  const auto perm = fisher_yates_prefix(spec.n, spec.n, perm_rng);
  SignalVector x(spec.n);
  for (std::size_t i = 0; i < spec.n; ++i) {
    const double mag = spec.radius * std::pow(static_cast<double>(i + 1), -1.0 / spec.p);
    const double sign = (signs.next_u64() >> 63) ? -1.0 : 1.0;
    x[perm[i]] = sign * mag;
  }
  return x;
}

/// nu = ||x - x_s||_2 + ||x - x_s||_1 / sqrt(s) + ||e||_2.
inline double unrecoverable_energy(const SignalVector& x, std::size_t s, double e_norm) {
  if (s == 0) throw InvalidArgument("sparsity s must be at least 1");
  if (s >= x.size()) return e_norm;
  const Norms tail = norms(x - best_s_approx(x, s).approx);
  return tail.l2 + tail.l1 / std::sqrt(static_cast<double>(s)) + e_norm;
}

/// (1.71 / sqrt(s)) ||x - x_{s/2}||_1 + ||e||, with s/2 rounded down and at least 1.
inline double tail_l1_bound(const SignalVector& x, std::size_t s, double e_norm) {
  if (s == 0) throw InvalidArgument("sparsity s must be at least 1");
  const std::size_t half = std::max<std::size_t>(1, s / 2);
  const double l1 = half >= x.size() ? 0.0 : norms(x - best_s_approx(x, half).approx).l1;
  return 1.71 / std::sqrt(static_cast<double>(s)) * l1 + e_norm;
}

/// 2 C_p R s^{1/2 - 1/p} + ||e||; infinite when p = 1.
inline double compressible_energy_bound(const CompressibleSpec& spec, std::size_t s, double e_norm) {
  const double sd = static_cast<double>(s);
  return 2.0 * spec.c_p() * spec.radius * std::pow(sd, 0.5 - 1.0 / spec.p) + e_norm;
}

struct NoiseFold {
  SampleVector effective_noise;  // Phi (x - x_s) + e
  double effective_norm = 0.0;
  double bound = 0.0;  // 1.05 (||x - x_s||_2 + ||x - x_s||_1 / sqrt(s)) + ||e||
};

/// Rewrites u = Phi x + e as u = Phi x_s + e~ and reports ||e~|| against its bound.
inline NoiseFold noise_fold(const SamplingOperator& op, const SignalVector& x, std::size_t s, const SampleVector& e) {
  if (s == 0) throw InvalidArgument("sparsity s must be at least 1");
  if (x.size() != op.cols() || e.size() != op.rows()) throw DimensionError("noise fold: dimension mismatch");
  const SignalVector tail = x - best_s_approx(x, std::min(s, x.size())).approx;
  NoiseFold out;
  out.effective_noise = op.apply(tail) + e;
  out.effective_norm = norm2(out.effective_noise);
  const Norms tn = norms(tail);
  out.bound = 1.05 * (tn.l2 + tn.l1 / std::sqrt(static_cast<double>(s))) + norm2(e);
  return out;
}

struct BandProfile {
  std::map<int, SupportSet> bands;  // nonempty bands only
  std::size_t profile() const { return bands.size(); }
};

/// B_j = { i : 2^{-(j+1)} ||x||^2 < |x_i|^2 <= 2^{-j} ||x||^2 }, compared exactly
/// through power-of-two scaling of ||x||^2.
inline BandProfile band_profile(const SignalVector& x) {
  double total = 0.0;
  for (const Scalar& z : x.entries()) total += std::norm(z);
  if (!(total > 0.0)) throw InvalidArgument("band profile of the zero signal is undefined");
  std::map<int, std::vector<std::size_t>> members;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double q = std::norm(x[i]);
    if (q == 0.0) continue;
    int j = 0;
    while (q <= std::ldexp(total, -(j + 1))) ++j;
    members[j].push_back(i);
  }
  BandProfile out;
  for (auto& [j, idx] : members) out.bands.emplace(j, SupportSet::from_sorted(x.size(), std::move(idx)));
  return out;
}

struct IterationBound {
  std::size_t profile = 0;
  std::size_t bound = 0;    // ceil(p log_{4/3}(1 + 4.6 sqrt(s/p))) + 6
  std::size_t uniform = 0;  // 6 (s + 1)
};

inline std::size_t iteration_bound_for(std::size_t profile, std::size_t s) {
  if (s == 0) throw InvalidArgument("sparsity s must be at least 1");
  if (profile == 0) return 6;
  const double p = static_cast<double>(profile);
  const double v = p * std::log1p(4.6 * std::sqrt(static_cast<double>(s) / p)) / std::log(4.0 / 3.0);
  return static_cast<std::size_t>(std::ceil(v)) + 6;
}

/// Profile of x_s and the resulting iteration count.
inline IterationBound iteration_bound(const SignalVector& x, std::size_t s) {
  IterationBound out;
  const SignalVector xs = best_s_approx(x, std::min(s, x.size())).approx;
  out.profile = norm2(xs) > 0.0 ? band_profile(xs).profile() : 0;
  out.bound = iteration_bound_for(out.profile, s);
  out.uniform = 6 * (s + 1);
  return out;
}

struct SnrMetrics {
  double snr_db = 0.0;
  double reconstruction_snr_db = 0.0;  // -infinity when a == x exactly
};

/// SNR = 10 log10(||x|| / nu), R-SNR = 10 log10(||x - a|| / ||x||).
inline SnrMetrics snr_metrics(const SignalVector& x, const SignalVector& a, double nu) {
  const double xn = norm2(x);
  if (!(xn > 0.0)) throw InvalidArgument("SNR of the zero signal is undefined");
  if (!(nu > 0.0)) throw InvalidArgument("SNR needs positive unrecoverable energy");
  const double err = distance2(x, a);
  SnrMetrics m;
  m.snr_db = 10.0 * std::log10(xn / nu);
  m.reconstruction_snr_db = err == 0.0 ? -std::numeric_limits<double>::infinity() : 10.0 * std::log10(err / xn);
  return m;
}

/// Rough iteration estimate 3.3 Delta + log2 sqrt(s) + 1 for a dynamic range of
/// Delta decibels. Reported, never enforced.
inline double dynamic_range_iterations(double delta_db, std::size_t s) {
  return 3.3 * delta_db + std::log2(std::sqrt(static_cast<double>(s))) + 1.0;
}

/// Dynamic range in dB of the nonzero entries: 10 log10(max |x_i| / min |x_i|).
inline double dynamic_range_db(const SignalVector& x) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = 0.0;
  for (const Scalar& z : x.entries()) {
    const double m = std::abs(z);
    if (m == 0.0) continue;
    lo = std::min(lo, m);
    hi = std::max(hi, m);
  }
  if (hi == 0.0) throw InvalidArgument("dynamic range of the zero signal is undefined");
  return 10.0 * std::log10(hi / lo);
}

/// Noise vector of exact l2 norm `norm`, direction Gaussian from `seed`.
inline SampleVector make_noise(std::size_t m, double norm, std::uint64_t seed) {
  if (!(norm >= 0.0)) throw InvalidArgument("noise norm must be nonnegative");
  SampleVector e(m);
  if (norm == 0.0 || m == 0) return e;
  CounterRng rng(seed);
  for (std::size_t i = 0; i < m; ++i) e[i] = rng.normal();
  return (norm / norm2(e)) * e;
}

/// Noise with i.i.d. N(0, sigma^2) real entries.
inline SampleVector make_noise_sigma(std::size_t m, double sigma, std::uint64_t seed) {
  if (!(sigma >= 0.0)) throw InvalidArgument("noise sigma must be nonnegative");
  SampleVector e(m);
  CounterRng rng(seed);
  for (std::size_t i = 0; i < m; ++i) e[i] = sigma * rng.normal();
  return e;
}

}  // namespace cosamp
