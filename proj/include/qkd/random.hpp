#pragma once

#include <cstdint>
#include <random>

namespace qkd {

// Seeded random source threaded explicitly through every stochastic
// operation. One owner at a time; not thread-safe.
class RandomSource {
 public:
  explicit RandomSource(std::uint64_t seed) : engine_(seed) {}

  // Uniform in [0, 1) with 53 bits of resolution.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  bool coin() { return (engine_() >> 63) != 0; }

  double gaussian(double sigma) {
    if (sigma <= 0.0) return 0.0;
    return sigma * normal_(engine_);
  }

  std::uint64_t next_u64() { return engine_(); }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace qkd
