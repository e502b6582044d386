#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>

namespace uie {

// Deterministic, portable random generator (splitmix64 core with explicit
// distribution code). libstdc++ distributions are implementation-defined,
// which would break the fixed-seed reproducibility contract.
class Rng {
 public:
  explicit Rng(uint64_t seed) : state_(seed) {}

  // Independent stream keyed by (seed, ids...). Used to make draws a pure
  // function of position (step, sample, role) so training is resumable.
  static Rng derive(uint64_t seed, std::initializer_list<uint64_t> ids) {
    uint64_t h = mix(seed ^ 0x243f6a8885a308d3ull);
    for (uint64_t id : ids) h = mix(h ^ mix(id + 0x9e3779b97f4a7c15ull));
    return Rng(h);
  }

  uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ull;
    return mix(state_);
  }

  // Uniform in [0, 1).
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // [0, n)
  int uniform_int(int n) { return static_cast<int>(next_u64() % static_cast<uint64_t>(n)); }

  // Standard normal via Box-Muller; draws exactly two uniforms per call.
  double normal() {
    double u1 = 1.0 - uniform();  // (0, 1]
    double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

  // Beta(a, b) by Johnk's method; intended for small shape parameters
  // (mixup uses Beta(0.2, 0.2)).
  double beta(double a, double b) {
    for (;;) {
      double x = std::pow(uniform(), 1.0 / a);
      double y = std::pow(uniform(), 1.0 / b);
      if (x + y > 0.0 && x + y <= 1.0) return x / (x + y);
    }
  }

 private:
  static uint64_t mix(uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  uint64_t state_;
};

}  // namespace uie
