#pragma once

// Portable, counter-based random streams.
//
// Every random quantity in the library is a pure function of a 64-bit key and
// a counter, so fixtures can be regenerated bit for bit in other languages:
//
//   mix64(z):      SplitMix64 finalizer
//                    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
//                    z = (z ^ (z >> 27)) * 0x94D049BB133111EB
//                    z =  z ^ (z >> 31)
//   word(key, i):  mix64(key + (i + 1) * 0x9E3779B97F4A7C15)      i = 0, 1, 2, ...
//   uniform:       (word >> 11) * 2^-53                          in [0, 1)
//   uniform_pos:   ((word >> 11) + 1) * 2^-53                    in (0, 1]
//   normal pair:   r = sqrt(-2 ln u1), u1 = uniform_pos(word i), u2 = uniform(word i+1)
//                  (r cos 2 pi u2, r sin 2 pi u2), consumed in that order
//   index below n: floor(word * n / 2^64)
//   derive_seed(master, a, b) = mix64(mix64(mix64(master) + a) + b)

#include <cmath>
#include <cstdint>
#include <numbers>
#include <numeric>
#include <optional>
#include <vector>

namespace cosamp {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b = 0) noexcept {
  return mix64(mix64(mix64(master) + a) + b);
}

class CounterRng {
 public:
  explicit CounterRng(std::uint64_t key) noexcept : key_(key) {}

  std::uint64_t key() const noexcept { return key_; }

  std::uint64_t next_u64() noexcept { return mix64(key_ + (++counter_) * kGolden); }

  double uniform() noexcept { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform_positive() noexcept { return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53; }

  std::uint64_t index_below(std::uint64_t n) noexcept {
    return static_cast<std::uint64_t>((static_cast<unsigned __int128>(next_u64()) * n) >> 64);
  }

  double normal() noexcept {
    if (spare_) {
      const double out = *spare_;
      spare_.reset();
      return out;
    }
    const double u1 = uniform_positive();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(theta);
    return r * std::cos(theta);
  }

  /// An independent stream keyed off this one.
  CounterRng split(std::uint64_t stream) const noexcept { return CounterRng(derive_seed(key_, stream)); }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  std::optional<double> spare_;
};

/// First `m` entries of a seeded Fisher-Yates shuffle of [0, n).
inline std::vector<std::size_t> fisher_yates_prefix(std::size_t n, std::size_t m, CounterRng& rng) {
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  for (std::size_t i = 0; i < m && i < n; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.index_below(n - i));
    std::swap(perm[i], perm[j]);
  }
  perm.resize(std::min(m, n));
  return perm;
}

}  // namespace cosamp
