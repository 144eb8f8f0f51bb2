#pragma once

// Small dense Hermitian eigenvalue and factorization kernels.
//
// Matrices are row-major n x n, either double or std::complex<double>.
// Only the upper triangle is trusted to be consistent; inputs are assumed
// Hermitian.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <span>
#include <vector>

#include "cosamp/error.hpp"

namespace cosamp {

namespace detail {

inline double conj_of(double x) { return x; }
inline std::complex<double> conj_of(const std::complex<double>& z) { return std::conj(z); }
inline double real_of(double x) { return x; }
inline double real_of(const std::complex<double>& z) { return z.real(); }
inline double abs2_of(double x) { return x * x; }
inline double abs2_of(const std::complex<double>& z) { return std::norm(z); }

}  // namespace detail

struct EigenExtremes {
  double min = 0.0;
  double max = 0.0;
};

/// All eigenvalues (ascending) by cyclic Jacobi rotations, iterated until the
/// off-diagonal Frobenius norm is below 1e-12 of the total.
template <class T>
std::vector<double> hermitian_eigenvalues(std::vector<T> a, std::size_t n) {
  if (a.size() != n * n) throw DimensionError("eigenvalue input is not n x n");
  auto at = [&](std::size_t i, std::size_t j) -> T& { return a[i * n + j]; };

  double total = 0.0;
  for (const T& v : a) total += detail::abs2_of(v);
  const double tol = 1e-24 * total;

  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) off += 2.0 * detail::abs2_of(at(i, j));
    if (off <= tol) break;

    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const T g = at(p, q);
        const double mag = std::sqrt(detail::abs2_of(g));
        if (mag == 0.0) continue;
        const T phase = g / mag;
        const double app = detail::real_of(at(p, p));
        const double aqq = detail::real_of(at(q, q));
        const double tau = (aqq - app) / (2.0 * mag);
        const double t = (tau >= 0.0 ? 1.0 : -1.0) / (std::abs(tau) + std::sqrt(1.0 + tau * tau));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = t * c;
        // U = diag(1, conj(phase)) * [[c, s], [-s, c]] acting on coordinates (p, q).
        const T upp = T(c);
        const T upq = T(s);
        const T uqp = T(-s) * detail::conj_of(phase);
        const T uqq = T(c) * detail::conj_of(phase);
        for (std::size_t k = 0; k < n; ++k) {  // A <- A U
          const T akp = at(k, p);
          const T akq = at(k, q);
          at(k, p) = akp * upp + akq * uqp;
          at(k, q) = akp * upq + akq * uqq;
        }
        for (std::size_t k = 0; k < n; ++k) {  // A <- U^* A
          const T apk = at(p, k);
          const T aqk = at(q, k);
          at(p, k) = detail::conj_of(upp) * apk + detail::conj_of(uqp) * aqk;
          at(q, k) = detail::conj_of(upq) * apk + detail::conj_of(uqq) * aqk;
        }
        at(p, q) = T(0.0);
        at(q, p) = T(0.0);
      }
    }
  }
  std::vector<double> eig(n);
  for (std::size_t i = 0; i < n; ++i) eig[i] = detail::real_of(at(i, i));
  std::sort(eig.begin(), eig.end());
  return eig;
}

/// Smallest and largest eigenvalue. Closed forms for n <= 3, Jacobi beyond.
template <class T>
EigenExtremes hermitian_extremes(std::span<const T> a, std::size_t n) {
  if (n == 0) return {};
  if (n == 1) {
    const double v = detail::real_of(a[0]);
    return {v, v};
  }
  if (n == 2) {
    const double x = detail::real_of(a[0]);
    const double y = detail::real_of(a[3]);
    const double mean = 0.5 * (x + y);
    const double rad = std::sqrt(0.25 * (x - y) * (x - y) + detail::abs2_of(a[1]));
    return {mean - rad, mean + rad};
  }
  if (n == 3) {
    const double a00 = detail::real_of(a[0]);
    const double a11 = detail::real_of(a[4]);
    const double a22 = detail::real_of(a[8]);
    const T a01 = a[1];
    const T a02 = a[2];
    const T a12 = a[5];
    const double p1 = detail::abs2_of(a01) + detail::abs2_of(a02) + detail::abs2_of(a12);
    if (p1 == 0.0) {
      return {std::min({a00, a11, a22}), std::max({a00, a11, a22})};
    }
    // Trigonometric solution of the characteristic cubic.
    const double q = (a00 + a11 + a22) / 3.0;
    const double b00 = a00 - q;
    const double b11 = a11 - q;
    const double b22 = a22 - q;
    const double p2 = b00 * b00 + b11 * b11 + b22 * b22 + 2.0 * p1;
    const double p = std::sqrt(p2 / 6.0);
    const double det = b00 * b11 * b22 + 2.0 * detail::real_of(a01 * a12 * detail::conj_of(a02)) -
                       b00 * detail::abs2_of(a12) - b11 * detail::abs2_of(a02) - b22 * detail::abs2_of(a01);
    const double r = std::clamp(det / (2.0 * p * p * p), -1.0, 1.0);
    // Near a repeated root acos loses half the digits; Jacobi does not.
    if (std::abs(r) > 1.0 - 1e-6) {
      const auto eig = hermitian_eigenvalues(std::vector<T>(a.begin(), a.end()), n);
      return {eig.front(), eig.back()};
    }
    const double phi = std::acos(r) / 3.0;
    const double hi = q + 2.0 * p * std::cos(phi);
    const double lo = q + 2.0 * p * std::cos(phi + 2.0 * std::numbers::pi / 3.0);
    return {lo, hi};
  }
  const auto eig = hermitian_eigenvalues(std::vector<T>(a.begin(), a.end()), n);
  return {eig.front(), eig.back()};
}

/// Solves G z = rhs for Hermitian positive definite G by Cholesky.
template <class T>
std::vector<T> cholesky_solve(std::vector<T> g, std::size_t n, std::vector<T> rhs) {
  auto at = [&](std::size_t i, std::size_t j) -> T& { return g[i * n + j]; };
  for (std::size_t j = 0; j < n; ++j) {
    double d = detail::real_of(at(j, j));
    for (std::size_t k = 0; k < j; ++k) d -= detail::abs2_of(at(j, k));
    if (!(d > 0.0)) throw SolverError("Cholesky factorization hit a nonpositive pivot");
    const double ljj = std::sqrt(d);
    at(j, j) = T(ljj);
    for (std::size_t i = j + 1; i < n; ++i) {
      T s = at(i, j);
      for (std::size_t k = 0; k < j; ++k) s -= at(i, k) * detail::conj_of(at(j, k));
      at(i, j) = s / ljj;
    }
  }
  for (std::size_t i = 0; i < n; ++i) {  // L y = rhs
    T s = rhs[i];
    for (std::size_t k = 0; k < i; ++k) s -= at(i, k) * rhs[k];
    rhs[i] = s / detail::real_of(at(i, i));
  }
  for (std::size_t ii = n; ii-- > 0;) {  // L^* z = y
    T s = rhs[ii];
    for (std::size_t k = ii + 1; k < n; ++k) s -= detail::conj_of(at(k, ii)) * rhs[k];
    rhs[ii] = s / detail::real_of(at(ii, ii));
  }
  return rhs;
}

}  // namespace cosamp
