#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "cosamp/cosamp.hpp"
#include "cosamp/rip.hpp"
#include "test_support.hpp"

using namespace cosamp;

namespace {

SignalVector planted(std::size_t n, std::size_t s, std::uint64_t seed) {
  CounterRng rng(seed);
  SignalVector x(n);
  for (std::size_t i : fisher_yates_prefix(n, s, rng)) x[i] = rng.uniform() < 0.5 ? -1.0 : 1.0;
  return x;
}

SampleVector noise_of_norm(std::size_t m, double norm, std::uint64_t seed) {
  SampleVector e = testing_support::random_complex_samples(m, seed);
  const double scale = norm / norm2(e);
  for (std::size_t i = 0; i < m; ++i) e[i] *= scale;
  return e;
}

RecoveryConfig config(std::size_t s, HaltingRule halting, std::size_t max_iter = 0) {
  RecoveryConfig cfg;
  cfg.s = s;
  cfg.halting = halting;
  if (max_iter) cfg.max_iterations = max_iter;
  return cfg;
}

// Small instances with exhaustively verified delta_4s <= 0.1.
struct GatedInstance {
  std::unique_ptr<SamplingOperator> op;
  std::size_t s;
  double delta_4s;
};

GatedInstance gated(std::uint64_t seed) {
  if (seed % 2 == 0) {
    auto op = std::make_unique<PartialFourierOperator>(testing_support::fourier_minus_one_row(32, seed % 32));
    const double d = *rip_estimate(*op, 4, RipMethod::exhaustive()).delta_exact;
    return {std::move(op), 1, d};
  }
  auto op = std::make_unique<DenseOperator>(testing_support::near_isometry(16, 0.09, seed));
  const double d = *rip_estimate(*op, 8, RipMethod::exhaustive()).delta_exact;
  return {std::move(op), 2, d};
}

}  // namespace

TEST(Identify, PicksTheNonzerosWhenThereAreExactlyTwoS) {
  SignalVector y(10);
  y[2] = 0.1;
  y[7] = Scalar(0.0, -3.0);
  y[9] = 1.0;
  y[4] = 2.0;
  EXPECT_EQ(identify(y, 4), SupportSet(10, {2, 4, 7, 9}));
}

TEST(Identify, EqualMagnitudesTakeTheFirstIndices) {
  SignalVector y(12);
  for (std::size_t i = 0; i < 12; ++i) y[i] = std::polar(1.0, 0.3 * static_cast<double>(i));
  EXPECT_EQ(identify(y, 4), SupportSet(12, {0, 1, 2, 3}));
  EXPECT_THROW(identify(y, 13), InvalidArgument);
}

TEST(Identify, MatchesFullSortOracle) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const SignalVector y = testing_support::random_complex_signal(32, seed);
    std::vector<std::size_t> order(32);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return std::abs(y[a]) > std::abs(y[b]); });
    order.resize(8);
    EXPECT_EQ(identify(y, 8), SupportSet(32, order));
  }
}

TEST(Identify, ZeroProxyGivesEmptySet) { EXPECT_TRUE(identify(SignalVector(16), 4).empty()); }

TEST(MergeSupport, Examples) {
  const SupportSet omega(12, {1, 5});
  EXPECT_EQ(merge_support(omega, SupportSet(12)), omega);
  EXPECT_EQ(merge_support(omega, omega), omega);
  EXPECT_EQ(merge_support(omega, SupportSet(12, {2, 5, 9})), SupportSet(12, {1, 2, 5, 9}));
}

TEST(Iteration, IdentityOperatorIsExactInOneStep) {
  const IdentityOperator op(32);
  const SignalVector x = planted(32, 4, 3);
  const SampleVector u(std::vector<Scalar>(x.entries().begin(), x.entries().end()));
  const auto st = cosamp_iteration(initial_state(op, u), op, u, config(4, {}));
  EXPECT_EQ(st.a, x);
  EXPECT_EQ(norm2(st.v), 0.0);
}

TEST(Iteration, ZeroSignalStaysZero) {
  const auto op = gaussian_operator(16, 64, 1);
  const SampleVector u(16);
  RecoveryState st = initial_state(op, u);
  for (int k = 0; k < 5; ++k) {
    st = cosamp_iteration(st, op, u, config(3, {}));
    EXPECT_EQ(norms(st.a).l0, 0u);
    EXPECT_TRUE(st.omega.empty());
  }
  EXPECT_EQ(st.k, 5u);
}

TEST(Iteration, GaussianErrorIsMonotoneAndConverges) {
  const auto op = gaussian_operator(32, 64, 20080417);
  const SignalVector x = planted(64, 3, 20080418);
  const SampleVector u = op.apply(x);
  RecoveryState st = initial_state(op, u);
  const RecoveryConfig cfg = config(3, {});
  std::vector<double> err;
  for (int k = 0; k < 20; ++k) {
    st = cosamp_iteration(st, op, u, cfg);
    err.push_back(distance2(x, st.a));
  }
  for (std::size_t k = 1; k < err.size(); ++k) EXPECT_LE(err[k], err[k - 1] * (1.0 + 1e-12) + 1e-15) << "k " << k;
  EXPECT_LE(err.back(), 1e-6 * norm2(x));
}

TEST(Iteration, StateInvariantsHold) {
  const auto op = partial_fourier_operator(48, 128, 6);
  const std::size_t s = 5;
  const SignalVector x = planted(128, s, 7);
  const SampleVector u = op.apply(x) + noise_of_norm(48, 0.05, 8);
  RecoveryState st = initial_state(op, u);
  for (int k = 0; k < 12; ++k) {
    st = cosamp_iteration(st, op, u, config(s, {}));
    EXPECT_LE(st.omega.size(), 2 * s);
    EXPECT_LE(st.merged.size(), 3 * s);
    EXPECT_LE(norms(st.a).l0, s);
    EXPECT_EQ(st.support, support_of(st.a));
    const SampleVector expect = u - op.apply(st.a);
    EXPECT_LE(norm2(st.v - expect), 1e-12 * std::max(1.0, norm2(u)));
  }
}

TEST(Recover, FixedZeroIterationsReturnsZero) {
  const auto op = gaussian_operator(16, 32, 1);
  const auto rep = recover(op, op.apply(planted(32, 2, 1)), config(2, HaltingRule::fixed(0)));
  EXPECT_EQ(rep.iterations_run, 0u);
  EXPECT_EQ(rep.halt_reason, HaltReason::FixedIterations);
  EXPECT_EQ(norms(rep.approximation).l0, 0u);
  EXPECT_TRUE(rep.trace.empty());
}

TEST(Recover, ZeroSamplesHaltImmediately) {
  const auto op = gaussian_operator(16, 32, 1);
  const auto rep = recover(op, SampleVector(16), config(2, HaltingRule::samples(0.0)));
  EXPECT_EQ(rep.iterations_run, 0u);
  EXPECT_EQ(rep.halt_reason, HaltReason::SampleNorm);
}

TEST(Recover, TraceLengthMatchesIterations) {
  const auto op = gaussian_operator(32, 64, 5);
  const SignalVector x = planted(64, 3, 5);
  for (std::size_t k : {1u, 4u, 9u}) {
    const auto rep = recover(op, op.apply(x), config(3, HaltingRule::fixed(k)), Truth{x, 0.0});
    EXPECT_EQ(rep.iterations_run, k);
    ASSERT_EQ(rep.trace.size(), k);
    for (std::size_t i = 0; i < k; ++i) EXPECT_EQ(rep.trace[i].k, i + 1);
    EXPECT_FALSE(std::isnan(rep.trace.back().err_l2));
  }
  const auto capped = recover(op, op.apply(x) + noise_of_norm(32, 0.1, 2), config(3, {}));
  EXPECT_EQ(capped.halt_reason, HaltReason::MaxIterations);
  EXPECT_EQ(capped.iterations_run, 24u);
}

TEST(Recover, DeterministicAcrossRuns) {
  const auto op = partial_fourier_operator(64, 256, 3);
  const SignalVector x = planted(256, 8, 4);
  const SampleVector u = op.apply(x) + noise_of_norm(64, 0.01, 5);
  const RecoveryConfig cfg = config(8, HaltingRule::fixed(10));
  const auto a = recover(op, u, cfg, Truth{x, 0.01});
  const auto b = recover(op, u, cfg, Truth{x, 0.01});
  EXPECT_EQ(a.approximation, b.approximation);
  ASSERT_EQ(a.trace.size(), b.trace.size());
  for (std::size_t i = 0; i < a.trace.size(); ++i) {
    EXPECT_EQ(a.trace[i].v_norm, b.trace[i].v_norm);
    EXPECT_EQ(a.trace[i].err_l2, b.trace[i].err_l2);
  }
}

TEST(Recover, ProxyRuleStopsWithoutCountingThePartialIteration) {
  const auto op = gaussian_operator(32, 64, 20080417);
  const SignalVector x = planted(64, 3, 20080418);
  const SampleVector u = op.apply(x);
  const auto rep = recover(op, u, config(3, HaltingRule::proxy(1e-8), 40));
  EXPECT_EQ(rep.halt_reason, HaltReason::ProxyInfinityNorm);
  EXPECT_EQ(rep.trace.size(), rep.iterations_run);
  EXPECT_LE(norm_inf(op.adjoint(u - op.apply(rep.approximation))), 1e-8 / std::sqrt(6.0));
  EXPECT_LE(distance2(x, rep.approximation), 1e-6);
}

TEST(Recover, SolverErrorCarriesIterationIndex) {
  // Identification width 4 exceeds the 3 rows, so the first merged support is rank deficient.
  const auto op = gaussian_operator(3, 32, 2);
  const SignalVector x = planted(32, 2, 2);
  for (auto solver : {LsqSolver::ConjugateGradient, LsqSolver::DirectReference}) {
    RecoveryConfig cfg = config(2, {});
    cfg.lsq.solver = solver;
    try {
      recover(op, op.apply(x), cfg);
      FAIL() << "expected SolverError";
    } catch (const SolverError& e) {
      EXPECT_EQ(e.iteration(), 1u);
      EXPECT_LT(e.smallest_eigenvalue(), 1e-12);
    }
  }
}

TEST(Recover, WarnsWhenFourSExceedsN) {
  const IdentityOperator op(16);
  const auto rep = recover(op, SampleVector(16), config(5, HaltingRule::fixed(1)));
  ASSERT_EQ(rep.warnings.size(), 1u);
  EXPECT_NE(rep.warnings[0].find("4s exceeds N"), std::string::npos);
  EXPECT_THROW(recover(op, SampleVector(16), config(0, {})), InvalidArgument);
  EXPECT_THROW(recover(op, SampleVector(15), config(1, {})), DimensionError);
}

TEST(Recover, SparsityEqualToNIsAllowed) {
  const auto op = testing_support::near_isometry(8, 0.2, 3);
  const SignalVector x = testing_support::random_complex_signal(8, 4);
  const auto rep = recover(op, op.apply(x), config(8, HaltingRule::fixed(10)));
  EXPECT_LE(distance2(x, rep.approximation), 1e-8 * norm2(x));
}

TEST(CheckHalt, Rules) {
  RecoveryState st;
  st.k = 2;
  st.v = SampleVector(4);
  st.y = SignalVector(8);
  EXPECT_EQ(check_halt(st, HaltingRule::samples(0.0), 1).reason, HaltReason::SampleNorm);
  st.v[0] = 1e-9;
  EXPECT_FALSE(check_halt(st, HaltingRule::samples(0.0), 1).halt);
  EXPECT_TRUE(check_halt(st, HaltingRule::samples(1e-9), 1).halt);
  st.y[3] = 0.5;  // threshold eta / sqrt(2s) = 1 / sqrt(4) = 0.5 for s = 2
  EXPECT_EQ(check_halt(st, HaltingRule::proxy(1.0), 2).reason, HaltReason::ProxyInfinityNorm);
  EXPECT_FALSE(check_halt(st, HaltingRule::proxy(0.99), 2).halt);
  EXPECT_EQ(check_halt(st, HaltingRule::fixed(2) | HaltingRule::samples(1.0), 1).reason,
            HaltReason::FixedIterations);
  st.k = 0;
  EXPECT_FALSE(check_halt(st, HaltingRule::proxy(1.0), 2).halt);
}

TEST(Diagnostics, IdentityOperatorHoldsWithSlack) {
  const IdentityOperator op(32);
  const SignalVector x = planted(32, 4, 9);
  RecoveryConfig cfg = config(4, HaltingRule::fixed(3));
  cfg.record_diagnostics = true;
  const auto rep = recover(op, SampleVector(std::vector<Scalar>(x.entries().begin(), x.entries().end())), cfg, Truth{x, 0.0});
  ASSERT_EQ(rep.audits.size(), 3u);
  for (const auto& audit : rep.audits)
    for (const auto& c : audit.checks) EXPECT_TRUE(c.holds()) << c.name;
  EXPECT_EQ(rep.audits[1].residual_norm, 0.0);
}

TEST(Diagnostics, MergerHoldsWithoutAnyIsometry) {
  // A badly conditioned operator: only the set-containment inequality is expected to hold.
  const auto op = gaussian_operator(20, 64, 31);
  const SignalVector x = planted(64, 5, 31);
  RecoveryConfig cfg = config(5, HaltingRule::fixed(8));
  cfg.record_diagnostics = true;
  const auto rep = recover(op, op.apply(x), cfg, Truth{x, 0.0});
  for (const auto& audit : rep.audits)
    for (const auto& c : audit.checks)
      if (c.name == "support_merger") {
        EXPECT_TRUE(c.holds());
      }
}

TEST(Gated, NoisyRecoveryMeetsFifteenTimesNoise) {
  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    const auto inst = gated(seed);
    ASSERT_LE(inst.delta_4s, 0.1);
    const std::size_t n = inst.op->cols();
    const SignalVector x = planted(n, inst.s, 100 + seed);
    const double e_norm = 0.1;
    const SampleVector u = inst.op->apply(x) + noise_of_norm(inst.op->rows(), e_norm, 200 + seed);
    RecoveryConfig cfg = config(inst.s, {});
    cfg.record_diagnostics = true;
    const auto rep = recover(*inst.op, u, cfg, Truth{x, e_norm});
    EXPECT_LE(distance2(x, rep.approximation), 15.0 * e_norm) << "seed " << seed;
    for (const auto& audit : rep.audits)
      for (const auto& c : audit.checks) EXPECT_TRUE(c.holds()) << "seed " << seed << " " << c.name;
  }
}
