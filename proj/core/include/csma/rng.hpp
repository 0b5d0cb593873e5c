#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>

namespace csma {

/// Portable seeded generator: xoshiro256** with its state expanded from the
/// seed by splitmix64. The bit stream depends only on the seed, so every
/// derived quantity is reproducible across compilers and platforms (normal
/// variates go through std::log/std::cos, which agree to the last ulp on
/// IEEE-754 libms in practice).
///
/// Single owner; never share one instance across threads.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed);

  std::uint64_t seed() const noexcept { return seed_; }

  std::uint64_t next_u64() noexcept;
  std::uint64_t operator()() noexcept { return next_u64(); }
  static constexpr std::uint64_t min() noexcept { return 0; }
  static constexpr std::uint64_t max() noexcept { return ~std::uint64_t{0}; }

  /// Uniform in [0, 1) with 53 random mantissa bits.
  double uniform() noexcept;
  /// Uniform in [lo, hi).
  double uniform(double lo, double hi) noexcept;
  /// Unbiased integer in [0, n). n must be positive.
  std::uint64_t below(std::uint64_t n) noexcept;
  /// Standard normal via Box-Muller (one variate per call, no caching).
  double normal() noexcept;
  double normal(double mean, double std_dev) noexcept;
  bool bernoulli(double p) noexcept { return uniform() < p; }

  /// In-place Fisher-Yates shuffle driven by below().
  template <typename T>
  void shuffle(std::span<T> items) noexcept {
    for (std::size_t i = items.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(below(i));
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::uint64_t seed_;
  std::array<std::uint64_t, 4> state_{};
};

/// splitmix64 finalizer; also used to derive independent sub-seeds.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) noexcept;

}  // namespace csma
