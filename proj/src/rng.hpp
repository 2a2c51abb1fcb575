#pragma once

#include <cstddef>
#include <cstdint>
#include <random>

namespace upscost::detail {

// mt19937_64 with platform-independent conversions (the standard fixes the
// engine's output but not the distributions').
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform on [0, 1) with 53 random bits.
  double unit() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * unit(); }
  std::size_t pick(std::size_t n) {
    const auto i = static_cast<std::size_t>(unit() * static_cast<double>(n));
    return i < n ? i : n - 1;
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace upscost::detail
