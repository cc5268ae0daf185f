#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <utility>

namespace mnar::rng {

/// SplitMix64 finalizer. Used both as a stream generator and as a counter hash.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Independent child seed for (master, index); used for per-trial and per-stage seeds.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) noexcept {
  return mix64(mix64(master) ^ mix64(index + 0x632be59bd9b4e019ULL));
}

/// Maps 64 random bits to a double in [0, 1).
constexpr double to_unit(std::uint64_t bits) noexcept {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

/// Counter-based uniform in [0, 1) for stream `seed`, counter `index`.
/// Cell-indexed sampling through this function is order independent.
constexpr double counter_uniform(std::uint64_t seed, std::uint64_t index) noexcept {
  return to_unit(mix64(seed ^ mix64(index)));
}

/// Counter-based standard normal (Box-Muller on two counter uniforms).
inline double counter_normal(std::uint64_t seed, std::uint64_t index) noexcept {
  const double u1 = 1.0 - counter_uniform(seed, 2 * index);  // (0, 1]
  const double u2 = counter_uniform(seed, 2 * index + 1);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

/// Small sequential generator with a fully specified output sequence.
class Stream {
 public:
  explicit Stream(std::uint64_t seed) noexcept : state_(seed) {}

  std::uint64_t next() noexcept {
    state_ += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  double uniform() noexcept { return to_unit(next()); }

  /// Uniform integer in [0, bound). Lemire's nearly-divisionless rejection.
  std::uint64_t below(std::uint64_t bound) noexcept {
    if (bound == 0) return 0;
    for (;;) {
      __extension__ using u128 = unsigned __int128;
      const u128 m = static_cast<u128>(next()) * bound;
      const auto low = static_cast<std::uint64_t>(m);
      if (low >= bound || low >= (-bound) % bound) return static_cast<std::uint64_t>(m >> 64);
    }
  }

  double normal() noexcept {
    const double u1 = 1.0 - uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  template <class T>
  void shuffle(std::span<T> items) noexcept {
    for (std::size_t k = items.size(); k > 1; --k) {
      const auto j = static_cast<std::size_t>(below(k));
      std::swap(items[k - 1], items[j]);
    }
  }

 private:
  std::uint64_t state_;
};

}  // namespace mnar::rng
