#pragma once

// Dense vectors, supports, restriction and best s-term approximation.
//
// Indices are 0-based. Magnitude ties are always broken toward the lower
// index, so every selection in the library is deterministic.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <initializer_list>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "cosamp/error.hpp"

namespace cosamp {

using Scalar = std::complex<double>;
using Coefficients = std::vector<Scalar>;

namespace detail {

inline bool all_finite(std::span<const Scalar> values) {
  return std::all_of(values.begin(), values.end(), [](const Scalar& z) {
    return std::isfinite(z.real()) && std::isfinite(z.imag());
  });
}

}  // namespace detail

/// Fixed-length dense vector of complex scalars. `Tag` separates signal space
/// (length N) from sample space (length m) at compile time.
template <class Tag>
class DenseVector {
 public:
  DenseVector() = default;
  explicit DenseVector(std::size_t n) : entries_(n, Scalar{0.0, 0.0}) {}
  explicit DenseVector(std::vector<Scalar> entries) : entries_(std::move(entries)) {
    if (!detail::all_finite(entries_)) {
      throw InvalidArgument("vector entries must be finite");
    }
  }
  DenseVector(std::initializer_list<Scalar> init) : DenseVector(std::vector<Scalar>(init)) {}

  static DenseVector from_real(std::span<const double> values) {
    std::vector<Scalar> out(values.begin(), values.end());
    return DenseVector(std::move(out));
  }

  std::size_t size() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }

  const Scalar& operator[](std::size_t i) const { return entries_[i]; }
  Scalar& operator[](std::size_t i) { return entries_[i]; }

  std::span<const Scalar> entries() const noexcept { return entries_; }
  std::span<Scalar> entries() noexcept { return entries_; }

  /// True when every imaginary part is exactly zero.
  bool is_real() const {
    return std::all_of(entries_.begin(), entries_.end(), [](const Scalar& z) { return z.imag() == 0.0; });
  }

  friend bool operator==(const DenseVector&, const DenseVector&) = default;

 private:
  std::vector<Scalar> entries_;
};

struct SignalTag {};
struct SampleTag {};

/// A length-N signal (x, a, b, proxies y).
using SignalVector = DenseVector<SignalTag>;
/// A length-m vector of samples (u, v, e).
using SampleVector = DenseVector<SampleTag>;

/// Strictly increasing set of indices in [0, N).
class SupportSet {
 public:
  SupportSet() = default;
  explicit SupportSet(std::size_t ambient) : ambient_(ambient) {}

  /// Sorts and validates; duplicates or out-of-range indices are rejected.
  SupportSet(std::size_t ambient, std::vector<std::size_t> indices) : ambient_(ambient), indices_(std::move(indices)) {
    std::sort(indices_.begin(), indices_.end());
    if (std::adjacent_find(indices_.begin(), indices_.end()) != indices_.end()) {
      throw InvalidArgument("support contains duplicate indices");
    }
    if (!indices_.empty() && indices_.back() >= ambient_) {
      throw InvalidArgument("support index " + std::to_string(indices_.back()) + " outside [0, " +
                            std::to_string(ambient_) + ")");
    }
  }

  static SupportSet full(std::size_t ambient) {
    std::vector<std::size_t> idx(ambient);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    return from_sorted(ambient, std::move(idx));
  }

  /// Caller guarantees strictly increasing indices below `ambient`.
  static SupportSet from_sorted(std::size_t ambient, std::vector<std::size_t> sorted) {
    SupportSet out(ambient);
    out.indices_ = std::move(sorted);
    return out;
  }

  std::size_t ambient() const noexcept { return ambient_; }
  std::size_t size() const noexcept { return indices_.size(); }
  bool empty() const noexcept { return indices_.empty(); }
  std::size_t operator[](std::size_t k) const { return indices_[k]; }
  std::span<const std::size_t> indices() const noexcept { return indices_; }
  auto begin() const noexcept { return indices_.begin(); }
  auto end() const noexcept { return indices_.end(); }

  bool contains(std::size_t i) const { return std::binary_search(indices_.begin(), indices_.end(), i); }

  friend bool operator==(const SupportSet&, const SupportSet&) = default;

 private:
  std::size_t ambient_ = 0;
  std::vector<std::size_t> indices_;
};

inline void require_same_ambient(const SupportSet& a, const SupportSet& b) {
  if (a.ambient() != b.ambient()) {
    throw DimensionError("supports live in different ambient dimensions");
  }
}

inline SupportSet set_union(const SupportSet& a, const SupportSet& b) {
  require_same_ambient(a, b);
  std::vector<std::size_t> out;
  out.reserve(a.size() + b.size());
  std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return SupportSet::from_sorted(a.ambient(), std::move(out));
}

inline SupportSet set_difference(const SupportSet& a, const SupportSet& b) {
  require_same_ambient(a, b);
  std::vector<std::size_t> out;
  std::set_difference(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return SupportSet::from_sorted(a.ambient(), std::move(out));
}

inline SupportSet set_intersection(const SupportSet& a, const SupportSet& b) {
  require_same_ambient(a, b);
  std::vector<std::size_t> out;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return SupportSet::from_sorted(a.ambient(), std::move(out));
}

inline SupportSet complement(const SupportSet& t) {
  std::vector<std::size_t> out;
  out.reserve(t.ambient() - t.size());
  std::size_t k = 0;
  for (std::size_t i = 0; i < t.ambient(); ++i) {
    if (k < t.size() && t[k] == i) {
      ++k;
    } else {
      out.push_back(i);
    }
  }
  return SupportSet::from_sorted(t.ambient(), std::move(out));
}

template <class Tag>
SupportSet support_of(const DenseVector<Tag>& x) {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] != Scalar{0.0, 0.0}) idx.push_back(i);
  }
  return SupportSet::from_sorted(x.size(), std::move(idx));
}

inline void require_ambient(const SignalVector& x, const SupportSet& t) {
  if (x.size() != t.ambient()) {
    throw DimensionError("signal length " + std::to_string(x.size()) + " does not match support ambient " +
                         std::to_string(t.ambient()));
  }
}

/// x|_T: equals x on T, zero elsewhere.
inline SignalVector restrict_to(const SignalVector& x, const SupportSet& t) {
  require_ambient(x, t);
  SignalVector out(x.size());
  for (std::size_t i : t) out[i] = x[i];
  return out;
}

/// The entries of x listed in T, in index order.
inline Coefficients gather(const SignalVector& x, const SupportSet& t) {
  require_ambient(x, t);
  Coefficients out;
  out.reserve(t.size());
  for (std::size_t i : t) out.push_back(x[i]);
  return out;
}

/// Places coefficients on T into an otherwise zero length-N signal.
inline SignalVector embed(std::span<const Scalar> coeffs, const SupportSet& t) {
  if (coeffs.size() != t.size()) {
    throw DimensionError("coefficient count " + std::to_string(coeffs.size()) + " != |T| = " +
                         std::to_string(t.size()));
  }
  SignalVector out(t.ambient());
  for (std::size_t k = 0; k < t.size(); ++k) out[t[k]] = coeffs[k];
  return out;
}

struct Norms {
  double l1 = 0.0;
  double l2 = 0.0;
  double linf = 0.0;
  std::size_t l0 = 0;
};

inline Norms norms(std::span<const Scalar> x) {
  Norms n;
  double sq = 0.0;
  for (const Scalar& z : x) {
    const double mag = std::abs(z);
    n.l1 += mag;
    sq += std::norm(z);
    n.linf = std::max(n.linf, mag);
    if (z != Scalar{0.0, 0.0}) ++n.l0;
  }
  n.l2 = std::sqrt(sq);
  return n;
}

template <class Tag>
Norms norms(const DenseVector<Tag>& x) {
  return norms(x.entries());
}

inline double norm2(std::span<const Scalar> x) {
  double sq = 0.0;
  for (const Scalar& z : x) sq += std::norm(z);
  return std::sqrt(sq);
}

template <class Tag>
double norm2(const DenseVector<Tag>& x) {
  return norm2(x.entries());
}

template <class Tag>
double norm_inf(const DenseVector<Tag>& x) {
  double m = 0.0;
  for (const Scalar& z : x.entries()) m = std::max(m, std::abs(z));
  return m;
}

/// <a, b> = sum conj(a_i) b_i.
inline Scalar inner(std::span<const Scalar> a, std::span<const Scalar> b) {
  if (a.size() != b.size()) throw DimensionError("inner product of vectors with different lengths");
  Scalar acc{0.0, 0.0};
  for (std::size_t i = 0; i < a.size(); ++i) acc += std::conj(a[i]) * b[i];
  return acc;
}

template <class Tag>
Scalar inner(const DenseVector<Tag>& a, const DenseVector<Tag>& b) {
  return inner(a.entries(), b.entries());
}

template <class Tag>
DenseVector<Tag> operator-(const DenseVector<Tag>& a, const DenseVector<Tag>& b) {
  if (a.size() != b.size()) throw DimensionError("vector difference of mismatched lengths");
  DenseVector<Tag> out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
  return out;
}

template <class Tag>
DenseVector<Tag> operator+(const DenseVector<Tag>& a, const DenseVector<Tag>& b) {
  if (a.size() != b.size()) throw DimensionError("vector sum of mismatched lengths");
  DenseVector<Tag> out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + b[i];
  return out;
}

template <class Tag>
DenseVector<Tag> operator*(double c, const DenseVector<Tag>& a) {
  DenseVector<Tag> out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = c * a[i];
  return out;
}

inline double distance2(const SignalVector& a, const SignalVector& b) { return norm2(a - b); }

/// Indices of the `count` largest-magnitude nonzero entries, ordered by
/// decreasing magnitude then increasing index.
inline std::vector<std::size_t> top_indices(std::span<const Scalar> x, std::size_t count) {
  std::vector<std::size_t> idx;
  idx.reserve(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] != Scalar{0.0, 0.0}) idx.push_back(i);
  }
  count = std::min(count, idx.size());
  // |z|^2 is compared through std::norm so equal magnitudes compare equal bit for bit.
  auto before = [&](std::size_t i, std::size_t j) {
    const double ni = std::norm(x[i]);
    const double nj = std::norm(x[j]);
    return ni > nj || (ni == nj && i < j);
  };
  if (count < idx.size()) {
    std::nth_element(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(count), idx.end(), before);
    idx.resize(count);
  }
  std::sort(idx.begin(), idx.end(), before);
  return idx;
}

struct BestApproximation {
  SignalVector approx;
  SupportSet support;
};

/// x_s: x restricted to its s largest-magnitude entries (lower index wins ties).
/// The support has min(s, ||x||_0) elements.
inline BestApproximation best_s_approx(const SignalVector& x, std::size_t s) {
  if (s > x.size()) {
    throw InvalidArgument("sparsity " + std::to_string(s) + " exceeds signal length " + std::to_string(x.size()));
  }
  auto idx = top_indices(x.entries(), s);
  std::sort(idx.begin(), idx.end());
  SupportSet support = SupportSet::from_sorted(x.size(), std::move(idx));
  return {restrict_to(x, support), std::move(support)};
}

}  // namespace cosamp
