#include <gtest/gtest.h>

#include <cmath>

#include "cosamp/variants.hpp"
#include "test_support.hpp"

using namespace cosamp;

namespace {

SignalVector planted(std::size_t n, std::size_t s, std::uint64_t seed) {
  CounterRng rng(seed);
  SignalVector x(n);
  for (std::size_t i : fisher_yates_prefix(n, s, rng)) x[i] = rng.uniform() < 0.5 ? -1.0 : 1.0;
  return x;
}

SampleVector with_noise(SampleVector u, double norm, std::uint64_t seed) {
  SampleVector e = testing_support::random_complex_samples(u.size(), seed);
  const double scale = norm / norm2(e);
  for (std::size_t i = 0; i < u.size(); ++i) u[i] += scale * e[i];
  return u;
}

SampleVector as_samples(const SignalVector& x) {
  return SampleVector(std::vector<Scalar>(x.entries().begin(), x.entries().end()));
}

RecoveryConfig config(std::size_t s, HaltingRule halting) {
  RecoveryConfig cfg;
  cfg.s = s;
  cfg.halting = halting;
  return cfg;
}

constexpr VariantKind kAll[] = {VariantKind::Standard, VariantKind::ResidualApproximation,
                                VariantKind::PruneBeforeEstimate};

}  // namespace

TEST(Variants, Names) {
  EXPECT_STREQ(to_string(VariantKind::Standard), "standard");
  EXPECT_STREQ(to_string(VariantKind::ResidualApproximation), "residual");
  EXPECT_STREQ(to_string(VariantKind::PruneBeforeEstimate), "prune-first");
}

TEST(Variants, IdentityOperatorIsExactInOneIteration) {
  const IdentityOperator op(40);
  const SignalVector x = planted(40, 5, 2);
  for (VariantKind kind : kAll) {
    const auto rep = recover_with(kind, op, as_samples(x), config(5, HaltingRule::fixed(1)), false);
    EXPECT_EQ(rep.approximation, x) << to_string(kind);
  }
}

TEST(Variants, ZeroSignalStaysZero) {
  const auto op = gaussian_operator(16, 64, 3);
  for (VariantKind kind : kAll) {
    const auto rep = recover_with(kind, op, SampleVector(16), config(3, HaltingRule::fixed(5)), false);
    EXPECT_EQ(norms(rep.approximation).l0, 0u) << to_string(kind);
    EXPECT_EQ(rep.iterations_run, 5u);
  }
}

TEST(Variants, IteratesStaySparseAndSamplesStayConsistent) {
  const auto op = partial_fourier_operator(64, 256, 11);
  const std::size_t s = 6;
  const SignalVector x = planted(256, s, 12);
  const SampleVector u = with_noise(op.apply(x), 0.05, 13);
  const RecoveryConfig cfg = config(s, {});
  using Step = RecoveryState (*)(const RecoveryState&, SignalVector, const SamplingOperator&, const SampleVector&,
                                 const RecoveryConfig&);
  for (Step step : {Step(&residual_iteration), Step(&prune_first_iteration)}) {
    RecoveryState st = initial_state(op, u);
    for (int k = 0; k < 10; ++k) {
      st = step(st, op.adjoint(st.v), op, u, cfg);
      EXPECT_LE(norms(st.a).l0, s);
      EXPECT_LE(norm2(st.v - (u - op.apply(st.a))), 1e-12 * norm2(u));
    }
  }
}

TEST(Variants, ResidualVariantTracksStandardError) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto op = partial_fourier_operator(96, 256, 40 + seed);
    const SignalVector x = planted(256, 8, 50 + seed);
    const SampleVector u = with_noise(op.apply(x), 0.05, 60 + seed);
    const RecoveryConfig cfg = config(8, HaltingRule::fixed(30));
    const double standard = distance2(x, recover(op, u, cfg).approximation);
    const double residual = distance2(x, recover_residual_variant(op, u, cfg).approximation);
    EXPECT_LE(residual, 10.0 * standard) << "seed " << seed;
  }
}

TEST(Variants, PruneFirstEqualsStandardWhenSEqualsN) {
  const auto op = testing_support::near_isometry(8, 0.3, 5);
  const SampleVector u = op.apply(testing_support::random_complex_signal(8, 6));
  const RecoveryConfig cfg = config(8, HaltingRule::fixed(4));
  const auto a = recover(op, u, cfg);
  const auto b = recover_prune_first_variant(op, u, cfg);
  EXPECT_EQ(a.approximation, b.approximation);
}

TEST(Variants, PruneFirstSelectsOnlyNewComponentsUnderExactLeastSquares) {
  // Exact LS on a support of size <= s makes v orthogonal to those columns, so
  // the proxy vanishes there and identification must pick fresh indices.
  const auto op = gaussian_operator(64, 128, 21);
  const std::size_t s = 5;
  const SampleVector u = with_noise(op.apply(planted(128, s, 22)), 0.2, 23);
  RecoveryConfig cfg = config(s, {});
  cfg.lsq.solver = LsqSolver::DirectReference;
  RecoveryState st = initial_state(op, u);
  for (int k = 0; k < 6; ++k) {
    const SignalVector y = op.adjoint(st.v);
    for (std::size_t i : st.support) EXPECT_LT(std::abs(y[i]), 1e-12 * norm2(u));
    RecoveryState next = prune_first_iteration(st, y, op, u, cfg);
    EXPECT_TRUE(set_intersection(next.omega, st.support).empty()) << "k " << k;
    st = std::move(next);
  }
}

TEST(SurrogatePrune, RanksOldEntriesByApproximationAndNewEntriesByProxy) {
  SignalVector a(8), y(8);
  a[1] = 0.5;
  a[4] = 3.0;
  y[1] = 100.0;  // ignored: index 1 is on the old support
  y[2] = 1.0;
  y[6] = 0.75;
  y[7] = 1.0;
  const SupportSet merged(8, {1, 2, 4, 6, 7});
  const SupportSet old(8, {1, 4});
  EXPECT_EQ(surrogate_prune(merged, old, a, y, 2), SupportSet(8, {2, 4}));
  EXPECT_EQ(surrogate_prune(merged, old, a, y, 3), SupportSet(8, {2, 4, 7}));
  EXPECT_EQ(surrogate_prune(merged, old, a, y, 4), SupportSet(8, {2, 4, 6, 7}));
}

TEST(FinalPolish, FixedPointOnLeastSquaresSolution) {
  const auto op = gaussian_operator(32, 64, 8);
  const SampleVector u = testing_support::random_complex_samples(32, 9);
  const SupportSet t(64, {3, 10, 33});
  const SignalVector a = embed(direct_solve(op, t, u).coefficients, t);
  EXPECT_LT(distance2(final_polish(op, u, a), a), 1e-12 * norm2(a));
}

TEST(FinalPolish, RecoversNoiselessSignalOnCorrectSupport) {
  const auto op = partial_fourier_operator(32, 128, 1);
  const SignalVector x = planted(128, 6, 2);
  SignalVector rough = x;
  for (std::size_t i : support_of(x)) rough[i] *= 0.7;
  EXPECT_LT(distance2(final_polish(op, op.apply(x), rough), x), 1e-12);
}

TEST(FinalPolish, NeverIncreasesSampleResidual) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto op = gaussian_operator(48, 128, 70 + seed);
    const SignalVector x = planted(128, 6, 80 + seed);
    const SampleVector u = with_noise(op.apply(x), 0.3, 90 + seed);
    const auto rep = recover(op, u, config(6, HaltingRule::fixed(3)));
    const SignalVector b = final_polish(op, u, rep.approximation);
    EXPECT_EQ(support_of(b).size() <= 6, true);
    EXPECT_LE(norm2(u - op.apply(b)), norm2(u - op.apply(rep.approximation)) * (1.0 + 1e-12));
    const auto polished = recover_with(VariantKind::Standard, op, u, config(6, HaltingRule::fixed(3)), true);
    EXPECT_EQ(polished.approximation, b);
  }
  EXPECT_THROW(final_polish(gaussian_operator(4, 8, 1), SampleVector(4), SignalVector(9)), DimensionError);
}
