#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>

#include "clothrl/core/rng.hpp"

namespace clothrl::env {

/// 2D gradient (Perlin) noise with a seeded permutation table. Single-octave
/// values vanish at integer lattice points; output is scaled into [-1, 1].
class PerlinField {
 public:
  explicit PerlinField(std::uint64_t seed, int octaves = 1, double persistence = 0.5)
      : octaves_(octaves), persistence_(persistence) {
    if (octaves_ < 1) throw std::invalid_argument("perlin: octaves must be >= 1");
    Rng rng(seed);
    std::array<std::uint8_t, 256> p;
    for (int i = 0; i < 256; ++i) p[std::size_t(i)] = std::uint8_t(i);
    for (int i = 255; i > 0; --i) {
      const int j = int(rng.uniform_index(std::uint64_t(i) + 1));
      std::swap(p[std::size_t(i)], p[std::size_t(j)]);
    }
    for (int i = 0; i < 512; ++i) perm_[std::size_t(i)] = p[std::size_t(i & 255)];
  }

  double operator()(double x, double y) const {
    double total = 0.0, amplitude = 1.0, freq = 1.0, norm = 0.0;
    for (int o = 0; o < octaves_; ++o) {
      total += amplitude * single(x * freq, y * freq);
      norm += amplitude;
      amplitude *= persistence_;
      freq *= 2.0;
    }
    return total / norm;
  }

 private:
  // value in [-1, 1]; exactly 0 at integer lattice points
  double single(double x, double y) const {
    const double fx = std::floor(x), fy = std::floor(y);
    const int xi = int(std::int64_t(fx)) & 255;
    const int yi = int(std::int64_t(fy)) & 255;
    const double dx = x - fx, dy = y - fy;
    const double u = fade(dx), v = fade(dy);
    const double g00 = grad(hash(xi, yi), dx, dy);
    const double g10 = grad(hash(xi + 1, yi), dx - 1.0, dy);
    const double g01 = grad(hash(xi, yi + 1), dx, dy - 1.0);
    const double g11 = grad(hash(xi + 1, yi + 1), dx - 1.0, dy - 1.0);
    const double value = lerp(lerp(g00, g10, u), lerp(g01, g11, u), v);
    // unit gradients bound single-octave 2D noise by sqrt(2)/2
    constexpr double kScale = 1.4142135623730951;
    return value * kScale;
  }

  int hash(int x, int y) const {
    return perm_[std::size_t(perm_[std::size_t(x & 255)] + (y & 255))];
  }

  static double grad(int h, double dx, double dy) {
    // 8 unit directions
    constexpr double s = 0.7071067811865476;
    switch (h & 7) {
      case 0: return dx;
      case 1: return -dx;
      case 2: return dy;
      case 3: return -dy;
      case 4: return s * (dx + dy);
      case 5: return s * (dx - dy);
      case 6: return s * (-dx + dy);
      default: return s * (-dx - dy);
    }
  }

  static double fade(double t) { return t * t * t * (t * (t * 6.0 - 15.0) + 10.0); }
  static double lerp(double a, double b, double t) { return a + (b - a) * t; }

  std::array<std::uint8_t, 512> perm_{};
  int octaves_ = 1;
  double persistence_ = 0.5;
};

}  // namespace clothrl::env
