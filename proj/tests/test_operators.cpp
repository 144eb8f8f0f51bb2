#include <gtest/gtest.h>

#include <cmath>
#include <memory>
#include <numeric>

#include "cosamp/fft.hpp"
#include "cosamp/operators.hpp"
#include "test_support.hpp"

using namespace cosamp;
using testing_support::random_complex_samples;
using testing_support::random_complex_signal;
using testing_support::rel_diff;

namespace {

std::vector<Scalar> dense_apply(const DenseMatrix& a, const SignalVector& x) {
  std::vector<Scalar> out(a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) out[i] += a(i, j) * x[j];
  return out;
}

std::vector<Scalar> dense_adjoint(const DenseMatrix& a, const SampleVector& v) {
  std::vector<Scalar> out(a.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) out[j] += std::conj(a(i, j)) * v[i];
  return out;
}

DenseOperator complex_dense(std::size_t m, std::size_t n, std::uint64_t seed) {
  CounterRng rng(seed);
  std::vector<Scalar> d(m * n);
  for (auto& z : d) {
    const double re = rng.normal();
    z = Scalar(re, rng.normal());
  }
  return DenseOperator(DenseMatrix(m, n, std::move(d)));
}

}  // namespace

TEST(Fft, MatchesNaiveDft) {
  for (std::size_t n : {1u, 2u, 8u, 64u}) {
    const SignalVector x = random_complex_signal(n, n);
    std::vector<Scalar> f(x.entries().begin(), x.entries().end());
    Radix2Fft(n).forward(f);
    std::vector<std::size_t> all(n);
    std::iota(all.begin(), all.end(), std::size_t{0});
    auto naive = testing_support::dft_rows(std::vector<Scalar>(x.entries().begin(), x.entries().end()), all);
    for (auto& z : naive) z *= std::sqrt(static_cast<double>(n));  // dft_rows scales by 1/sqrt(rows)
    EXPECT_LT(rel_diff(f, naive), 1e-13) << "n = " << n;
    Radix2Fft(n).backward(f);
    for (auto& z : f) z /= static_cast<double>(n);
    EXPECT_LT(rel_diff(f, x.entries()), 1e-13);
  }
  EXPECT_THROW(Radix2Fft(12), InvalidArgument);
}

TEST(PartialFourier, MatchesExplicitDftFormula) {
  for (std::size_t n : {8u, 64u, 128u}) {
    const auto op = partial_fourier_operator(n / 2, n, 100 + n);
    const SignalVector x = random_complex_signal(n, 7);
    const auto expected = testing_support::dft_rows(std::vector<Scalar>(x.entries().begin(), x.entries().end()),
                                                    op.row_set());
    EXPECT_LT(rel_diff(op.apply(x).entries(), expected), 1e-12) << "n = " << n;
  }
}

TEST(PartialFourier, RowsAreDistinctAndSeeded) {
  const auto a = partial_fourier_operator(20, 64, 9);
  const auto b = partial_fourier_operator(20, 64, 9);
  EXPECT_TRUE(std::equal(a.row_set().begin(), a.row_set().end(), b.row_set().begin()));
  std::vector<std::size_t> rows(a.row_set().begin(), a.row_set().end());
  std::sort(rows.begin(), rows.end());
  EXPECT_EQ(std::adjacent_find(rows.begin(), rows.end()), rows.end());
  EXPECT_THROW(partial_fourier_operator(65, 64, 1), InvalidArgument);
  EXPECT_THROW(partial_fourier_operator(4, 48, 1), InvalidArgument);
  EXPECT_THROW(partial_fourier_operator(8, std::vector<std::size_t>{1, 1}), InvalidArgument);
}

TEST(PartialFourier, FullRowSetIsUnitary) {
  std::vector<std::size_t> rows(32);
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  const auto op = partial_fourier_operator(32, rows);
  const SignalVector x = random_complex_signal(32, 4);
  EXPECT_NEAR(norm2(op.apply(x)), norm2(x), 1e-12 * norm2(x));
  EXPECT_LT(rel_diff(op.adjoint(op.apply(x)).entries(), x.entries()), 1e-13);
}

TEST(Operators, FastPathsMatchMaterializedMatrices) {
  std::vector<std::unique_ptr<SamplingOperator>> ops;
  ops.push_back(std::make_unique<PartialFourierOperator>(partial_fourier_operator(40, 128, 3)));
  ops.push_back(std::make_unique<DenseOperator>(gaussian_operator(30, 100, 4)));
  ops.push_back(std::make_unique<DenseOperator>(complex_dense(12, 20, 5)));
  ops.push_back(std::make_unique<IdentityOperator>(16));
  for (const auto& op : ops) {
    const DenseMatrix a = op->materialize();
    for (std::uint64_t t = 0; t < 50; ++t) {
      const SignalVector x = random_complex_signal(op->cols(), 1000 + t);
      const SampleVector v = random_complex_samples(op->rows(), 2000 + t);
      EXPECT_LT(rel_diff(op->apply(x).entries(), dense_apply(a, x)), 1e-10);
      EXPECT_LT(rel_diff(op->adjoint(v).entries(), dense_adjoint(a, v)), 1e-10);
    }
  }
}

TEST(Operators, AdjointIdentity) {
  std::vector<std::unique_ptr<SamplingOperator>> ops;
  ops.push_back(std::make_unique<PartialFourierOperator>(partial_fourier_operator(64, 256, 8)));
  ops.push_back(std::make_unique<DenseOperator>(gaussian_operator(48, 96, 8)));
  ops.push_back(std::make_unique<DenseOperator>(complex_dense(10, 30, 8)));
  for (const auto& op : ops) {
    for (std::uint64_t t = 0; t < 100; ++t) {
      const SignalVector x = random_complex_signal(op->cols(), 3000 + t);
      const SampleVector v = random_complex_samples(op->rows(), 4000 + t);
      const Scalar lhs = inner(op->apply(x), v);
      const Scalar rhs = inner(x, op->adjoint(v));
      EXPECT_LT(std::abs(lhs - rhs), 1e-10 * norm2(x) * norm2(v));
    }
  }
}

TEST(Operators, SubmatrixActionsMatchFullActions) {
  std::vector<std::unique_ptr<SamplingOperator>> ops;
  ops.push_back(std::make_unique<PartialFourierOperator>(partial_fourier_operator(32, 64, 2)));
  ops.push_back(std::make_unique<DenseOperator>(gaussian_operator(32, 64, 2)));
  ops.push_back(std::make_unique<DenseOperator>(complex_dense(32, 64, 2)));
  ops.push_back(std::make_unique<IdentityOperator>(64));
  const SupportSet t(64, {0, 3, 17, 40, 63});
  for (const auto& op : ops) {
    const SignalVector x = random_complex_signal(64, 9);
    const SampleVector v = random_complex_samples(op->rows(), 10);
    const Coefficients c = gather(x, t);
    EXPECT_LT(rel_diff(op->apply_sub(t, c).entries(), op->apply(restrict_to(x, t)).entries()), 1e-13);
    EXPECT_LT(rel_diff(op->adjoint_sub(t, v), gather(op->adjoint(v), t)), 1e-13);
  }
}

TEST(Operators, DimensionChecks) {
  const auto op = gaussian_operator(8, 16, 1);
  EXPECT_THROW(op.apply(SignalVector(15)), DimensionError);
  EXPECT_THROW(op.adjoint(SampleVector(9)), DimensionError);
  EXPECT_THROW(op.apply_sub(SupportSet(17, {1}), Coefficients(1)), DimensionError);
  EXPECT_THROW(op.apply_sub(SupportSet(16, {1}), Coefficients(2)), DimensionError);
  EXPECT_THROW(gaussian_operator(0, 16, 1), InvalidArgument);
  EXPECT_THROW(gaussian_operator(17, 16, 1), InvalidArgument);
}

TEST(Gaussian, ColumnNormsConcentrate) {
  const auto op = gaussian_operator(256, 512, 77);
  const DenseMatrix a = op.materialize();
  for (std::size_t j = 0; j < a.cols(); ++j) {
    double sq = 0.0;
    for (std::size_t i = 0; i < a.rows(); ++i) sq += std::norm(a(i, j));
    EXPECT_GE(std::sqrt(sq), 0.7);
    EXPECT_LE(std::sqrt(sq), 1.3);
  }
}

TEST(Gaussian, PreservesEnergyOnAverage) {
  const SignalVector x = random_complex_signal(128, 5);
  const double x2 = std::pow(norm2(x), 2);
  double total = 0.0;
  for (std::uint64_t t = 0; t < 200; ++t) total += std::pow(norm2(gaussian_operator(32, 128, 500 + t).apply(x)), 2);
  EXPECT_NEAR(total / 200.0, x2, 0.1 * x2);
}

TEST(Gaussian, SameSeedSameMatrix) {
  EXPECT_EQ(gaussian_operator(8, 16, 3).materialize(), gaussian_operator(8, 16, 3).materialize());
  EXPECT_NE(gaussian_operator(8, 16, 3).materialize(), gaussian_operator(8, 16, 4).materialize());
}

TEST(Descriptor, RebuildsTheSameOperator) {
  const auto pf = partial_fourier_operator(16, 64, 12);
  const auto rebuilt = make_operator(pf.descriptor());
  EXPECT_EQ(rebuilt->materialize(), pf.materialize());
  const auto g = gaussian_operator(16, 64, 12);
  EXPECT_EQ(make_operator(g.descriptor())->materialize(), g.materialize());
  const auto explicit_rows = partial_fourier_operator(64, std::vector<std::size_t>{3, 9, 27});
  ASSERT_TRUE(explicit_rows.descriptor().rows.has_value());
  EXPECT_EQ(make_operator(explicit_rows.descriptor())->materialize(), explicit_rows.materialize());
  EXPECT_THROW(make_operator(OperatorDescriptor{OperatorKind::Identity, 3, 4, {}, {}, {}}), InvalidArgument);
}
