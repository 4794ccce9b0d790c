#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace hotdef {

inline constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Derives an independent sub-stream key from a master seed and a tag.
inline constexpr std::uint64_t derive_seed(std::uint64_t master,
                                           std::uint64_t tag) noexcept {
  return splitmix64(master ^ splitmix64(tag + 0x632be59bd9b4e019ULL));
}

inline constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a,
                                           std::uint64_t b) noexcept {
  return derive_seed(derive_seed(master, a), b);
}

/// Counter-based standard normal stream: value i is a pure function of
/// (key, i), so any slice can be generated independently and in any order.
/// Uses Box-Muller on the pair (2k, 2k+1) of counter-derived uniforms.
class CounterNormals {
 public:
  explicit constexpr CounterNormals(std::uint64_t key) noexcept : key_(key) {}

  double operator()(std::uint64_t index) const noexcept {
    const std::uint64_t pair = index >> 1;
    const double u1 = uniform(2 * pair);
    const double u2 = uniform(2 * pair + 1);
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    return (index & 1U) ? radius * std::sin(angle) : radius * std::cos(angle);
  }

  /// Uniform in the open interval (0, 1).
  double uniform(std::uint64_t counter) const noexcept {
    const std::uint64_t bits = splitmix64(key_ ^ splitmix64(counter));
    return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
  }

  std::uint64_t key() const noexcept { return key_; }

 private:
  std::uint64_t key_;
};

}  // namespace hotdef
