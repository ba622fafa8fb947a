#pragma once

#include <array>
#include <cstdint>

namespace procam {

/// xoshiro256** seeded through splitmix64. Gives identical streams on every
/// platform; `normal()` uses Box–Muller on top of it.
class Xoshiro256 {
 public:
  explicit Xoshiro256(std::uint64_t seed);

  std::uint64_t next();
  /// Uniform in [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Standard normal deviate.
  double normal();

 private:
  std::array<std::uint64_t, 4> s_{};
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace procam
