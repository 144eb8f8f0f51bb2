#include <gtest/gtest.h>

#include <cmath>

#include "cosamp/eigen.hpp"
#include "cosamp/rip.hpp"
#include "test_support.hpp"

using namespace cosamp;

namespace {

// delta_r by nested-loop enumeration with power-iteration eigenvalues, reading
// Gram entries straight from the materialized matrix.
double oracle_delta(const SamplingOperator& op, std::size_t r) {
  const DenseMatrix a = op.materialize();
  const std::size_t n = a.cols();
  auto gram = [&](std::size_t p, std::size_t q) {
    Scalar acc{};
    for (std::size_t i = 0; i < a.rows(); ++i) acc += std::conj(a(i, p)) * a(i, q);
    return acc;
  };
  double worst = 0.0;
  std::vector<std::size_t> idx(r);
  std::function<void(std::size_t, std::size_t)> rec = [&](std::size_t depth, std::size_t start) {
    if (depth == r) {
      std::vector<Scalar> g(r * r);
      for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < r; ++j) g[i * r + j] = gram(idx[i], idx[j]);
      const auto [lo, hi] = testing_support::power_extremes(g, r);
      worst = std::max({worst, hi - 1.0, 1.0 - lo});
      return;
    }
    for (std::size_t k = start; k < n; ++k) {
      idx[depth] = k;
      rec(depth + 1, k + 1);
    }
  };
  rec(0, 0);
  return worst;
}

std::vector<Scalar> with_spectrum(const std::vector<double>& eig, std::uint64_t seed) {
  const std::size_t n = eig.size();
  const auto q = testing_support::random_orthogonal(n, seed);
  // Complex Hermitian: Q diag(eig) Q^T, then conjugate by a diagonal phase.
  std::vector<Scalar> phase(n);
  CounterRng rng(seed + 99);
  for (auto& p : phase) p = std::polar(1.0, 2.0 * std::numbers::pi * rng.uniform());
  std::vector<Scalar> a(n * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      double acc = 0.0;
      for (std::size_t k = 0; k < n; ++k) acc += q[i * n + k] * eig[k] * q[j * n + k];
      a[i * n + j] = phase[i] * acc * std::conj(phase[j]);
    }
  return a;
}

}  // namespace

TEST(Eigen, JacobiRecoversKnownSpectrum) {
  const std::vector<double> eig{-2.0, 0.25, 0.5, 1.0, 3.0, 7.5};
  const auto a = with_spectrum(eig, 4);
  const auto got = hermitian_eigenvalues(a, eig.size());
  for (std::size_t i = 0; i < eig.size(); ++i) EXPECT_NEAR(got[i], eig[i], 1e-12);
}

TEST(Eigen, ClosedFormsAgreeWithJacobi) {
  for (std::size_t n : {1u, 2u, 3u}) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      CounterRng rng(seed * 7 + n);
      std::vector<double> eig(n);
      for (auto& e : eig) e = rng.normal();
      const auto a = with_spectrum(eig, seed);
      const auto closed = hermitian_extremes<Scalar>(a, n);
      const auto jac = hermitian_eigenvalues(a, n);
      EXPECT_NEAR(closed.min, jac.front(), 1e-11);
      EXPECT_NEAR(closed.max, jac.back(), 1e-11);
    }
  }
  // Repeated eigenvalue in the 3x3 trigonometric branch.
  const auto a = with_spectrum({2.0, 2.0, 5.0}, 3);
  const auto e = hermitian_extremes<Scalar>(a, 3);
  EXPECT_NEAR(e.min, 2.0, 1e-9);
  EXPECT_NEAR(e.max, 5.0, 1e-9);
}

TEST(Eigen, CholeskySolvesPositiveDefiniteSystems) {
  const auto a = with_spectrum({0.5, 1.0, 2.0, 4.0}, 8);
  const std::vector<Scalar> z{Scalar(1, 2), Scalar(-1, 0), Scalar(0, 3), Scalar(2, -2)};
  std::vector<Scalar> rhs(4);
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 4; ++j) rhs[i] += a[i * 4 + j] * z[j];
  const auto got = cholesky_solve(a, 4, rhs);
  EXPECT_LT(testing_support::rel_diff(got, z), 1e-12);
  EXPECT_THROW(cholesky_solve(with_spectrum({-1.0, 1.0}, 2), 2, std::vector<Scalar>(2)), SolverError);
}

TEST(Rip, IdentityIsAnExactIsometry) {
  const IdentityOperator id(16);
  const auto est = rip_estimate(id, 4, RipMethod::exhaustive());
  ASSERT_TRUE(est.delta_exact.has_value());
  EXPECT_EQ(*est.delta_exact, 0.0);
}

TEST(Rip, ExhaustiveMatchesIndependentOracle) {
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const auto op = gaussian_operator(8, 12, seed);
    for (std::size_t r = 1; r <= 3; ++r) {
      const auto est = rip_estimate(op, r, RipMethod::exhaustive());
      EXPECT_NEAR(*est.delta_exact, oracle_delta(op, r), 1e-9) << "seed " << seed << " r " << r;
    }
  }
  const auto pf = partial_fourier_operator(6, 8, 5);
  EXPECT_NEAR(*rip_estimate(pf, 3, RipMethod::exhaustive()).delta_exact, oracle_delta(pf, 3), 1e-9);
}

TEST(Rip, FourierMinusOneRowHasClosedFormDelta) {
  const auto op = testing_support::fourier_minus_one_row(32, 5);
  for (std::size_t r = 1; r <= 4; ++r) {
    const double expected = 1.0 - (32.0 / 31.0) * (1.0 - static_cast<double>(r) / 32.0);
    EXPECT_NEAR(*rip_estimate(op, r, RipMethod::exhaustive()).delta_exact, expected, 1e-12);
  }
}

TEST(Rip, MonteCarloIsALowerBound) {
  const auto op = gaussian_operator(24, 32, 21);
  const auto exact = rip_estimate(op, 2, RipMethod::exhaustive());
  const auto mc = rip_estimate(op, 2, RipMethod::monte_carlo(10000, 3));
  EXPECT_LE(mc.delta_lower, *exact.delta_exact + 1e-12);
  EXPECT_FALSE(mc.delta_exact.has_value());
  // The worst support reported really attains the value.
  const GramMatrix gram(op);
  EXPECT_NEAR(gram.deviation(exact.worst_support.indices()), *exact.delta_exact, 1e-15);
}

TEST(Rip, NondecreasingInR) {
  const auto op = gaussian_operator(10, 14, 6);
  double prev = 0.0;
  for (std::size_t r = 1; r <= 5; ++r) {
    const double d = *rip_estimate(op, r, RipMethod::exhaustive()).delta_exact;
    EXPECT_GE(d, prev - 1e-12);
    prev = d;
  }
}

TEST(Rip, BudgetExceededSuggestsMonteCarlo) {
  const auto op = gaussian_operator(24, 32, 1);
  try {
    rip_estimate(op, 8, RipMethod::exhaustive());
    FAIL() << "expected BudgetExceeded";
  } catch (const BudgetExceeded& e) {
    EXPECT_NE(std::string(e.what()).find("Monte Carlo"), std::string::npos);
  }
  EXPECT_NO_THROW(rip_estimate(op, 8, RipMethod::monte_carlo(100, 1)));
}

TEST(Rip, ResultDoesNotDependOnWorkerCount) {
  const auto op = gaussian_operator(12, 20, 2);
  const auto a = rip_estimate(op, 4, RipMethod::exhaustive(), kDefaultRipBudget, 1);
  const auto b = rip_estimate(op, 4, RipMethod::exhaustive(), kDefaultRipBudget, 4);
  EXPECT_EQ(*a.delta_exact, *b.delta_exact);
  EXPECT_EQ(a.worst_support, b.worst_support);
  const auto c = rip_estimate(op, 4, RipMethod::monte_carlo(500, 9), kDefaultRipBudget, 1);
  const auto d = rip_estimate(op, 4, RipMethod::monte_carlo(500, 9), kDefaultRipBudget, 3);
  EXPECT_EQ(c.delta_lower, d.delta_lower);
}

TEST(Rip, CombinationRankingRoundTrips) {
  std::vector<std::size_t> c{0, 1, 2};
  std::uint64_t rank = 0;
  do {
    EXPECT_EQ(unrank_combination(rank, 7, 3), c);
    ++rank;
  } while (next_combination(c, 7));
  EXPECT_EQ(rank, binomial(7, 3));
}

TEST(RipConsequences, HoldOnSeededGaussianOperator) {
  const auto op = gaussian_operator(24, 32, 404);
  RipConsequenceInputs in;
  for (std::uint64_t t = 0; t < 30; ++t) {
    CounterRng rng(t);
    auto idx = fisher_yates_prefix(32, 2, rng);
    in.supports.emplace_back(32, idx);
    in.signals.push_back(testing_support::random_complex_signal(32, 50 + t));
    SignalVector sparse(32);
    sparse[idx[0]] = 1.0;
    in.signals.push_back(sparse);
  }
  const auto rep = check_rip_consequences(op, in);
  EXPECT_GT(rep.checks.size(), 60u);
  for (const auto& c : rep.checks) EXPECT_TRUE(c.holds()) << c.name << ": " << c.lhs << " > " << c.rhs;
}
