#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

namespace qdaw {

/// 64-bit FNV-1a hash; stable across platforms, used for instance identity.
constexpr std::uint64_t fnv1a64(std::string_view data) {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (const char c : data) {
    hash ^= static_cast<std::uint8_t>(c);
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

/// splitmix64 finaliser; used to derive independent sub-stream seeds from a
/// base seed plus arbitrary tags without correlations between streams.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t mix64(std::uint64_t a, std::uint64_t b) {
  return mix64(a ^ mix64(b));
}

template <typename... Rest>
constexpr std::uint64_t mix64(std::uint64_t a, std::uint64_t b, Rest... rest) {
  return mix64(mix64(a, b), static_cast<std::uint64_t>(rest)...);
}

/// Deterministic RNG. The engine (mt19937_64) is fully specified by the
/// standard; the distribution helpers below are hand-rolled because the
/// standard library distributions are implementation-defined and would break
/// bit-for-bit reproducibility across toolchains.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  std::uint64_t next_u64() { return eng_(); }

  /// Uniform double in [0, 1), 53 random mantissa bits.
  double next_unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [0, bound); unbiased via rejection.
  std::uint64_t next_below(std::uint64_t bound) {
    if (bound <= 1) return 0;
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % bound + 1) % bound;
    std::uint64_t v = next_u64();
    while (v > limit) v = next_u64();
    return v % bound;
  }

  /// Uniform integer in [lo, hi] inclusive.
  int next_int(int lo, int hi) {
    return lo + static_cast<int>(next_below(static_cast<std::uint64_t>(hi - lo) + 1));
  }

  bool next_bool() { return (next_u64() >> 63) != 0; }

  /// Standard normal via Box-Muller (pair cached).
  double next_normal() {
    if (have_cached_) {
      have_cached_ = false;
      return cached_;
    }
    double u1 = next_unit();
    while (u1 <= 0.0) u1 = next_unit();
    const double u2 = next_unit();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double two_pi = 6.283185307179586476925286766559;
    cached_ = r * std::sin(two_pi * u2);
    have_cached_ = true;
    return r * std::cos(two_pi * u2);
  }

 private:
  std::mt19937_64 eng_;
  bool have_cached_ = false;
  double cached_ = 0.0;
};

}  // namespace qdaw
