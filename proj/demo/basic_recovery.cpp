// Recovers a 20-sparse signal of length 4096 from 512 partial Fourier samples
// with a little noise, printing the error after each iteration.

#include <cstdio>

#include "cosamp/cosamp.hpp"
#include "cosamp/signals.hpp"

int main() {
  using namespace cosamp;
  const std::size_t n = 4096, m = 512, s = 20;
  const auto op = partial_fourier_operator(m, n, /*seed=*/1);
  const SignalVector x = make_sparse(n, s, MagnitudeLaw::flat(), /*seed=*/2);
  const SampleVector e = make_noise(m, 1e-3, /*seed=*/3);
  const SampleVector u = op.apply(x) + e;

  RecoveryConfig cfg;
  cfg.s = s;
  cfg.halting = HaltingRule::samples(1.5e-3);
  const RecoveryReport rep = recover(op, u, cfg, Truth{x, norm2(e)});

  for (const auto& row : rep.trace) std::printf("k=%2zu  ||v|| = %.3e  ||x - a|| = %.3e\n", row.k, row.v_norm, row.err_l2);
  std::printf("halted after %zu iterations (%s), relative error %.3e\n", rep.iterations_run,
              to_string(rep.halt_reason), distance2(x, rep.approximation) / norm2(x));
}
