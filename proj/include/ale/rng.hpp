#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string_view>

#include "ale/types.hpp"

namespace ale {

// FNV-1a. Used for token ids, per-scenario seeds and config hashes; must stay
// stable across releases because golden files and sidecars embed its output.
inline std::uint64_t fnv1a(std::string_view s,
                           std::uint64_t h = 0xcbf29ce484222325ull) {
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

inline std::uint64_t fnv1a_u64(std::uint64_t v,
                               std::uint64_t h = 0xcbf29ce484222325ull) {
  for (int i = 0; i < 8; ++i) {
    h ^= (v >> (8 * i)) & 0xffu;
    h *= 0x100000001b3ull;
  }
  return h;
}

// splitmix64 stream. Chosen over std engines so that sequences are identical
// for every standard library; std::normal_distribution is not portable.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1). 53-bit mantissa path keeps doubles exact.
  double next_uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Uniform integer in [0, n). n must be > 0. Rejection-free modulo is fine
  // here; bias over a 64-bit range is far below anything a test can observe.
  std::uint64_t next_below(std::uint64_t n) { return next_u64() % n; }

  // Box-Muller. One value per call; the spare is kept.
  double next_normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = next_uniform();
    double u2 = next_uniform();
    while (u1 <= 0.0) u1 = next_uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * std::numbers::pi * u2;
    spare_     = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

  Matrix normal_matrix(int rows, int cols) {
    Matrix m(rows, cols);
    for (int i = 0; i < rows; ++i)
      for (int j = 0; j < cols; ++j)
        m(i, j) = static_cast<Scalar>(next_normal());
    return m;
  }

  Latent normal_latent(int c, int h, int w) {
    Latent z;
    z.channels = c;
    z.height   = h;
    z.width    = w;
    z.values   = normal_matrix(c, h * w);
    return z;
  }

 private:
  std::uint64_t state_;
  double spare_     = 0.0;
  bool has_spare_   = false;
};

}  // namespace ale
