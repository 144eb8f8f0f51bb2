#pragma once

#include <bit>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "cosamp/error.hpp"

namespace cosamp {

/// Iterative radix-2 Cooley-Tukey transform for power-of-two lengths.
///
/// forward:  X_k = sum_n x_n exp(-2 pi i k n / N)
/// backward: x_n = sum_k X_k exp(+2 pi i k n / N)      (unnormalized)
class Radix2Fft {
 public:
  explicit Radix2Fft(std::size_t n) : n_(n) {
    if (n == 0 || !std::has_single_bit(n)) {
      throw InvalidArgument("FFT length must be a power of two, got " + std::to_string(n));
    }
    const int bits = std::countr_zero(n);
    reversed_.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t r = 0;
      for (int b = 0; b < bits; ++b) r |= ((i >> b) & 1U) << (bits - 1 - b);
      reversed_[i] = r;
    }
    twiddle_.resize(n / 2);
    for (std::size_t k = 0; k < n / 2; ++k) {
      const double angle = -2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n);
      twiddle_[k] = {std::cos(angle), std::sin(angle)};
    }
  }

  std::size_t size() const noexcept { return n_; }

  void forward(std::span<std::complex<double>> data) const { transform(data, false); }
  void backward(std::span<std::complex<double>> data) const { transform(data, true); }

 private:
  void transform(std::span<std::complex<double>> data, bool conjugate) const {
    if (data.size() != n_) throw DimensionError("FFT input length mismatch");
    for (std::size_t i = 0; i < n_; ++i) {
      if (i < reversed_[i]) std::swap(data[i], data[reversed_[i]]);
    }
    for (std::size_t len = 2; len <= n_; len <<= 1) {
      const std::size_t half = len / 2;
      const std::size_t stride = n_ / len;
      for (std::size_t start = 0; start < n_; start += len) {
        for (std::size_t j = 0; j < half; ++j) {
          const std::complex<double> w = twiddle_[j * stride];
          const double wi = conjugate ? -w.imag() : w.imag();
          const std::complex<double> d = data[start + j + half];
          const std::complex<double> t{w.real() * d.real() - wi * d.imag(), w.real() * d.imag() + wi * d.real()};
          data[start + j + half] = data[start + j] - t;
          data[start + j] += t;
        }
      }
    }
  }

  std::size_t n_;
  std::vector<std::size_t> reversed_;
  std::vector<std::complex<double>> twiddle_;
};

}  // namespace cosamp
