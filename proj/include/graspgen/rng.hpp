// Deterministic random number generation. All distributions are implemented
// here rather than with std:: distributions because the standard leaves their
// algorithms implementation defined; these produce identical streams on every
// platform for a given seed.
#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "graspgen/geometry.hpp"

namespace graspgen {

// splitmix64 step, used for seed mixing.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d9b9b3f794a2e5ull;
  return x ^ (x >> 31);
}

// Combines a master seed with stream identifiers (candidate index, stage tag)
// into an independent per-stream seed.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a,
                              std::uint64_t b = 0) {
  return mix64(mix64(seed ^ mix64(a)) ^ mix64(b ^ 0x5851f42d4c957f2dull));
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1) with 53 bits of precision.
  double uniform() { return (next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n). n must be > 0. Rejection-free modulo is fine
  // here: n is always far below 2^64 so bias is negligible, but determinism
  // is what matters.
  std::uint64_t uniform_index(std::uint64_t n) { return next_u64() % n; }

  // Standard normal via Box-Muller. Caches the second variate.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    double u2 = uniform();
    // Avoid log(0).
    if (u1 < 1e-300) u1 = 1e-300;
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 2.0 * kPi * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

  Vec3 normal_vec3() { return Vec3(normal(), normal(), normal()); }

  // Uniform random unit quaternion (Shoemake).
  Quat uniform_quaternion() {
    double u1 = uniform();
    double u2 = uniform();
    double u3 = uniform();
    double s1 = std::sqrt(1.0 - u1);
    double s2 = std::sqrt(u1);
    double t1 = 2.0 * kPi * u2;
    double t2 = 2.0 * kPi * u3;
    return Quat(s2 * std::cos(t2), s1 * std::sin(t1), s1 * std::cos(t1),
                s2 * std::sin(t2));
  }

  // Uniform point on the unit sphere.
  Vec3 uniform_unit_vector() {
    double z = uniform(-1.0, 1.0);
    double a = 2.0 * kPi * uniform();
    double r = std::sqrt(std::max(0.0, 1.0 - z * z));
    return Vec3(r * std::cos(a), r * std::sin(a), z);
  }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace graspgen
