#pragma once

#include <bit>
#include <cstdint>
#include <span>

namespace csma {

/// 64-bit FNV-1a, fed byte by byte in little-endian order so the digest is
/// the same on every host.
class Fnv1a64 {
 public:
  static constexpr std::uint64_t kOffset = 0xcbf29ce484222325ULL;
  static constexpr std::uint64_t kPrime = 0x100000001b3ULL;

  void add_u64(std::uint64_t v) noexcept {
    for (int i = 0; i < 8; ++i) {
      state_ ^= (v >> (8 * i)) & 0xffU;
      state_ *= kPrime;
    }
  }
  void add_double(double v) noexcept { add_u64(std::bit_cast<std::uint64_t>(v)); }
  void add_doubles(std::span<const double> values) noexcept {
    for (double v : values) add_double(v);
  }
  void add_byte(std::uint8_t b) noexcept {
    state_ ^= b;
    state_ *= kPrime;
  }

  std::uint64_t digest() const noexcept { return state_; }

 private:
  std::uint64_t state_ = kOffset;
};

}  // namespace csma
