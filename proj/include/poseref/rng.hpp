#pragma once

#include <cstdint>

#include "poseref/geometry.hpp"

namespace poseref {

// splitmix64 generator. Hand-rolled so that seeded runs are reproducible
// bit-for-bit regardless of standard library implementation.
class Rng {
 public:
  explicit Rng(uint64_t seed) : state_(seed) {}

  uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ull;
    uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1).
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

  int uniform_int(int lo, int hi) {  // inclusive bounds
    return lo + static_cast<int>(next_u64() % static_cast<uint64_t>(hi - lo + 1));
  }

 private:
  uint64_t state_;
};

// Derives an independent stream seed from a base seed and a stream index.
inline uint64_t mix_seed(uint64_t seed, uint64_t stream) {
  uint64_t z = seed + 0x9e3779b97f4a7c15ull * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

inline Vec3 random_unit_vector(Rng& rng) {
  const double z = rng.uniform(-1.0, 1.0);
  const double phi = rng.uniform(0.0, 2.0 * kPi);
  const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
  return {r * std::cos(phi), r * std::sin(phi), z};
}

// Uniform random rotation (Shoemake's subgroup algorithm).
inline UnitQuaternion random_rotation(Rng& rng) {
  const double u1 = rng.next_double();
  const double u2 = rng.uniform(0.0, 2.0 * kPi);
  const double u3 = rng.uniform(0.0, 2.0 * kPi);
  const double a = std::sqrt(1.0 - u1);
  const double b = std::sqrt(u1);
  return UnitQuaternion::normalized(b * std::cos(u3), a * std::sin(u2), a * std::cos(u2), b * std::sin(u3));
}

}  // namespace poseref
