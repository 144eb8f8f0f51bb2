#pragma once

// Matrix-free sampling operators.
//
// Every operator exposes the four actions the recovery loop needs:
//   apply        x   -> Phi x
//   adjoint      v   -> Phi^* v
//   apply_sub    c_T -> Phi_T c
//   adjoint_sub  v   -> Phi_T^* v
// The submatrix actions default to embed-then-apply / apply-then-gather so
// that fast operators never extract columns. Dense operators override them
// with direct column access.

#include <cmath>
#include <complex>
#include <cstdint>
#include <memory>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "cosamp/error.hpp"
#include "cosamp/fft.hpp"
#include "cosamp/linalg.hpp"
#include "cosamp/rng.hpp"

namespace cosamp {

enum class OperatorKind { Identity, ExplicitDense, Gaussian, PartialFourier };

inline const char* to_string(OperatorKind kind) {
  switch (kind) {
    case OperatorKind::Identity: return "identity";
    case OperatorKind::ExplicitDense: return "dense";
    case OperatorKind::Gaussian: return "gaussian";
    case OperatorKind::PartialFourier: return "partial_fourier";
  }
  return "unknown";
}

/// Row-major m x N matrix of complex scalars.
class DenseMatrix {
 public:
  DenseMatrix() = default;
  DenseMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols) {}
  DenseMatrix(std::size_t rows, std::size_t cols, std::vector<Scalar> data)
      : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_) throw DimensionError("matrix data size does not equal rows*cols");
    if (!detail::all_finite(data_)) throw InvalidArgument("matrix entries must be finite");
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  Scalar& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  const Scalar& operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }
  std::span<const Scalar> data() const noexcept { return data_; }

  friend bool operator==(const DenseMatrix&, const DenseMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<Scalar> data_;
};

/// Everything needed to rebuild an operator; serialized into experiment configs.
struct OperatorDescriptor {
  OperatorKind kind = OperatorKind::Gaussian;
  std::size_t m = 0;
  std::size_t n = 0;
  std::optional<std::uint64_t> seed;
  std::optional<std::vector<std::size_t>> rows;  // PartialFourier explicit row set
  std::optional<std::string> path;               // ExplicitDense matrix file (CSKM)

  friend bool operator==(const OperatorDescriptor&, const OperatorDescriptor&) = default;
};

class SamplingOperator {
 public:
  SamplingOperator(std::size_t m, std::size_t n) : m_(m), n_(n) {
    if (m == 0 || n == 0) throw InvalidArgument("operator dimensions must be positive");
  }
  virtual ~SamplingOperator() = default;

  std::size_t rows() const noexcept { return m_; }
  std::size_t cols() const noexcept { return n_; }

  virtual OperatorKind kind() const noexcept = 0;
  virtual OperatorDescriptor descriptor() const = 0;

  /// Explicit m x N matrix. Fast operators build it from the closed-form entries.
  virtual DenseMatrix materialize() const = 0;

  SampleVector apply(const SignalVector& x) const {
    if (x.size() != n_) {
      throw DimensionError("apply: signal length " + std::to_string(x.size()) + " != N = " + std::to_string(n_));
    }
    SampleVector out(m_);
    do_apply(x.entries(), out.entries());
    return out;
  }

  SignalVector adjoint(const SampleVector& v) const {
    if (v.size() != m_) {
      throw DimensionError("adjoint: sample length " + std::to_string(v.size()) + " != m = " + std::to_string(m_));
    }
    SignalVector out(n_);
    do_adjoint(v.entries(), out.entries());
    return out;
  }

  /// Phi_T c for coefficients c listed in the order of T.
  SampleVector apply_sub(const SupportSet& t, std::span<const Scalar> c) const {
    check_support(t);
    if (c.size() != t.size()) throw DimensionError("apply_sub: coefficient count != |T|");
    SampleVector out(m_);
    do_apply_sub(t, c, out.entries());
    return out;
  }

  /// Phi_T^* v, returned in the order of T.
  Coefficients adjoint_sub(const SupportSet& t, const SampleVector& v) const {
    check_support(t);
    if (v.size() != m_) throw DimensionError("adjoint_sub: sample length != m");
    Coefficients out(t.size());
    do_adjoint_sub(t, v.entries(), out);
    return out;
  }

 protected:
  virtual void do_apply(std::span<const Scalar> x, std::span<Scalar> out) const = 0;
  virtual void do_adjoint(std::span<const Scalar> v, std::span<Scalar> out) const = 0;

  virtual void do_apply_sub(const SupportSet& t, std::span<const Scalar> c, std::span<Scalar> out) const {
    std::vector<Scalar> full(n_);
    for (std::size_t k = 0; k < t.size(); ++k) full[t[k]] = c[k];
    do_apply(full, out);
  }

  virtual void do_adjoint_sub(const SupportSet& t, std::span<const Scalar> v, std::span<Scalar> out) const {
    std::vector<Scalar> full(n_);
    do_adjoint(v, full);
    for (std::size_t k = 0; k < t.size(); ++k) out[k] = full[t[k]];
  }

 private:
  void check_support(const SupportSet& t) const {
    if (t.ambient() != n_) throw DimensionError("support ambient dimension != operator N");
  }

  std::size_t m_;
  std::size_t n_;
};

class IdentityOperator final : public SamplingOperator {
 public:
  explicit IdentityOperator(std::size_t n) : SamplingOperator(n, n) {}

  OperatorKind kind() const noexcept override { return OperatorKind::Identity; }
  OperatorDescriptor descriptor() const override { return {OperatorKind::Identity, rows(), cols(), {}, {}, {}}; }

  DenseMatrix materialize() const override {
    DenseMatrix out(rows(), cols());
    for (std::size_t i = 0; i < rows(); ++i) out(i, i) = 1.0;
    return out;
  }

 protected:
  void do_apply(std::span<const Scalar> x, std::span<Scalar> out) const override {
    std::copy(x.begin(), x.end(), out.begin());
  }
  void do_adjoint(std::span<const Scalar> v, std::span<Scalar> out) const override {
    std::copy(v.begin(), v.end(), out.begin());
  }
  void do_apply_sub(const SupportSet& t, std::span<const Scalar> c, std::span<Scalar> out) const override {
    std::fill(out.begin(), out.end(), Scalar{});
    for (std::size_t k = 0; k < t.size(); ++k) out[t[k]] = c[k];
  }
  void do_adjoint_sub(const SupportSet& t, std::span<const Scalar> v, std::span<Scalar> out) const override {
    for (std::size_t k = 0; k < t.size(); ++k) out[k] = v[t[k]];
  }
};

/// Explicit matrix. Real-valued matrices (e.g. Gaussian) use a real x complex kernel.
class DenseOperator final : public SamplingOperator {
 public:
  explicit DenseOperator(DenseMatrix matrix, OperatorKind kind = OperatorKind::ExplicitDense,
                         std::optional<std::uint64_t> seed = {})
      : SamplingOperator(matrix.rows(), matrix.cols()), matrix_(std::move(matrix)), kind_(kind), seed_(seed) {
    bool real = true;
    for (const Scalar& z : matrix_.data()) real = real && z.imag() == 0.0;
    if (real) {
      real_.reserve(matrix_.data().size());
      for (const Scalar& z : matrix_.data()) real_.push_back(z.real());
    }
  }

  OperatorKind kind() const noexcept override { return kind_; }
  OperatorDescriptor descriptor() const override { return {kind_, rows(), cols(), seed_, {}, {}}; }
  DenseMatrix materialize() const override { return matrix_; }
  const DenseMatrix& matrix() const noexcept { return matrix_; }
  bool is_real() const noexcept { return !real_.empty(); }

 protected:
  void do_apply(std::span<const Scalar> x, std::span<Scalar> out) const override {
    const std::size_t n = cols();
    for (std::size_t i = 0; i < rows(); ++i) {
      double re = 0.0;
      double im = 0.0;
      if (is_real()) {
        const double* row = real_.data() + i * n;
        for (std::size_t j = 0; j < n; ++j) {
          re += row[j] * x[j].real();
          im += row[j] * x[j].imag();
        }
      } else {
        const Scalar* row = matrix_.data().data() + i * n;
        for (std::size_t j = 0; j < n; ++j) {
          re += row[j].real() * x[j].real() - row[j].imag() * x[j].imag();
          im += row[j].real() * x[j].imag() + row[j].imag() * x[j].real();
        }
      }
      out[i] = {re, im};
    }
  }

  void do_adjoint(std::span<const Scalar> v, std::span<Scalar> out) const override {
    const std::size_t n = cols();
    std::vector<double> re(n, 0.0);
    std::vector<double> im(n, 0.0);
    for (std::size_t i = 0; i < rows(); ++i) {
      const double vr = v[i].real();
      const double vi = v[i].imag();
      if (is_real()) {
        const double* row = real_.data() + i * n;
        for (std::size_t j = 0; j < n; ++j) {
          re[j] += row[j] * vr;
          im[j] += row[j] * vi;
        }
      } else {
        const Scalar* row = matrix_.data().data() + i * n;
        for (std::size_t j = 0; j < n; ++j) {
          // conj(a) * v
          re[j] += row[j].real() * vr + row[j].imag() * vi;
          im[j] += row[j].real() * vi - row[j].imag() * vr;
        }
      }
    }
    for (std::size_t j = 0; j < n; ++j) out[j] = {re[j], im[j]};
  }

  void do_apply_sub(const SupportSet& t, std::span<const Scalar> c, std::span<Scalar> out) const override {
    for (std::size_t i = 0; i < rows(); ++i) {
      Scalar acc{};
      for (std::size_t k = 0; k < t.size(); ++k) acc += matrix_(i, t[k]) * c[k];
      out[i] = acc;
    }
  }

  void do_adjoint_sub(const SupportSet& t, std::span<const Scalar> v, std::span<Scalar> out) const override {
    for (std::size_t k = 0; k < t.size(); ++k) {
      Scalar acc{};
      for (std::size_t i = 0; i < rows(); ++i) acc += std::conj(matrix_(i, t[k])) * v[i];
      out[k] = acc;
    }
  }

 private:
  DenseMatrix matrix_;
  std::vector<double> real_;
  OperatorKind kind_;
  std::optional<std::uint64_t> seed_;
};

/// sqrt(N/m) times m selected rows of the unitary N-point DFT:
///   Phi[k, n] = exp(-2 pi i rows[k] n / N) / sqrt(m)
/// so E||Phi x||^2 = ||x||^2 over random row sets and m = N gives a unitary map.
class PartialFourierOperator final : public SamplingOperator {
 public:
  PartialFourierOperator(std::size_t n, std::vector<std::size_t> rows, std::optional<std::uint64_t> seed = {})
      : SamplingOperator(validated_m(n, rows), n), fft_(n), rows_(std::move(rows)), seed_(seed),
        scale_(1.0 / std::sqrt(static_cast<double>(rows_.size()))) {}

  OperatorKind kind() const noexcept override { return OperatorKind::PartialFourier; }
  OperatorDescriptor descriptor() const override {
    OperatorDescriptor d{OperatorKind::PartialFourier, rows(), cols(), seed_, {}, {}};
    if (!seed_) d.rows = rows_;
    return d;
  }
  std::span<const std::size_t> row_set() const noexcept { return rows_; }

  DenseMatrix materialize() const override {
    const std::size_t n = cols();
    DenseMatrix out(rows(), n);
    for (std::size_t k = 0; k < rows(); ++k) {
      for (std::size_t j = 0; j < n; ++j) {
        const std::size_t phase = (rows_[k] * j) % n;
        const double angle = -2.0 * std::numbers::pi * static_cast<double>(phase) / static_cast<double>(n);
        out(k, j) = scale_ * Scalar{std::cos(angle), std::sin(angle)};
      }
    }
    return out;
  }

 protected:
  void do_apply(std::span<const Scalar> x, std::span<Scalar> out) const override {
    std::vector<Scalar> work(x.begin(), x.end());
    fft_.forward(work);
    for (std::size_t k = 0; k < rows_.size(); ++k) out[k] = scale_ * work[rows_[k]];
  }

  void do_adjoint(std::span<const Scalar> v, std::span<Scalar> out) const override {
    std::fill(out.begin(), out.end(), Scalar{});
    for (std::size_t k = 0; k < rows_.size(); ++k) out[rows_[k]] = v[k];
    fft_.backward(out);
    for (Scalar& z : out) z *= scale_;
  }

 private:
  static std::size_t validated_m(std::size_t n, const std::vector<std::size_t>& rows) {
    if (rows.empty()) throw InvalidArgument("partial Fourier operator needs at least one row");
    if (rows.size() > n) throw InvalidArgument("partial Fourier: m > N");
    std::vector<bool> seen(n, false);
    for (std::size_t r : rows) {
      if (r >= n) throw InvalidArgument("partial Fourier row index out of range");
      if (seen[r]) throw InvalidArgument("partial Fourier rows must be distinct");
      seen[r] = true;
    }
    return rows.size();
  }

  Radix2Fft fft_;
  std::vector<std::size_t> rows_;
  std::optional<std::uint64_t> seed_;
  double scale_;
};

/// Entries of sqrt(m) Phi are i.i.d. standard normal; generated row-major from
/// a single counter stream keyed by `seed` (see rng.hpp for the exact recipe).
inline DenseOperator gaussian_operator(std::size_t m, std::size_t n, std::uint64_t seed) {
  if (m == 0 || m > n) throw InvalidArgument("gaussian operator requires 0 < m <= N");
  CounterRng rng(seed);
  const double scale = 1.0 / std::sqrt(static_cast<double>(m));
  std::vector<Scalar> data(m * n);
  for (Scalar& z : data) z = scale * rng.normal();
  return DenseOperator(DenseMatrix(m, n, std::move(data)), OperatorKind::Gaussian, seed);
}

/// Row set = first m entries of a Fisher-Yates shuffle of [0, N) keyed by `seed`.
inline PartialFourierOperator partial_fourier_operator(std::size_t m, std::size_t n, std::uint64_t seed) {
  if (m == 0 || m > n) throw InvalidArgument("partial Fourier operator requires 0 < m <= N");
  CounterRng rng(seed);
  return PartialFourierOperator(n, fisher_yates_prefix(n, m, rng), seed);
}

inline PartialFourierOperator partial_fourier_operator(std::size_t n, std::vector<std::size_t> rows) {
  return PartialFourierOperator(n, std::move(rows));
}

/// Builds the operator a descriptor names. ExplicitDense descriptors need the
/// matrix supplied separately (see io.hpp: load_operator).
inline std::unique_ptr<SamplingOperator> make_operator(const OperatorDescriptor& d) {
  switch (d.kind) {
    case OperatorKind::Identity:
      if (d.m != d.n) throw InvalidArgument("identity operator requires m == N");
      return std::make_unique<IdentityOperator>(d.n);
    case OperatorKind::Gaussian:
      if (!d.seed) throw InvalidArgument("gaussian operator descriptor needs a seed");
      return std::make_unique<DenseOperator>(gaussian_operator(d.m, d.n, *d.seed));
    case OperatorKind::PartialFourier:
      if (d.rows) {
        if (d.rows->size() != d.m) throw InvalidArgument("partial Fourier row set size != m");
        return std::make_unique<PartialFourierOperator>(d.n, *d.rows);
      }
      if (!d.seed) throw InvalidArgument("partial Fourier descriptor needs a seed or a row set");
      return std::make_unique<PartialFourierOperator>(partial_fourier_operator(d.m, d.n, *d.seed));
    case OperatorKind::ExplicitDense:
      throw InvalidArgument("dense operator descriptors are loaded from a matrix file");
  }
  throw InvalidArgument("unknown operator kind");
}

}  // namespace cosamp
