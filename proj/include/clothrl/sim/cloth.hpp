#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "clothrl/core/vec3.hpp"

namespace clothrl::sim {

enum class SpringKind : std::uint8_t { structural = 0, shear = 1, bend = 2 };

struct Spring {
  int a = 0, b = 0;
  double rest = 0.0;       // m
  double stiffness = 0.0;  // N/m
  double damping = 0.0;    // N*s/m, along the spring axis
  SpringKind kind = SpringKind::structural;
};

struct ClothParams {
  int nu = 16, nv = 16;          // nodes per side
  double width = 0.28;           // m along u
  double height = 0.28;          // m along v
  double node_mass = 0.002;      // kg
  double k_structural = 100.0;   // N/m
  double k_shear = 20.0;
  double k_bend = 1.0;           // near-free folding; cloth buckles rather than resists
  double spring_damping = 0.35;  // N*s/m
  double global_damping = 0.8;   // 1/s velocity decay
};

/// Grid of mass nodes connected by structural (4-neighbor), shear (diagonal)
/// and bend (2-apart) springs. Rest lengths come from the flat geometry.
class Cloth {
 public:
  Cloth() = default;

  static Cloth make_flat(const ClothParams& p, const Vec3& center, double yaw = 0.0) {
    if (p.nu < 2 || p.nv < 2) throw std::invalid_argument("cloth: grid must be at least 2x2");
    if (p.width <= 0.0 || p.height <= 0.0)
      throw std::invalid_argument("cloth: dimensions must be positive");
    Cloth c;
    c.params_ = p;
    const int n = p.nu * p.nv;
    c.positions_.resize(std::size_t(n));
    c.velocities_.assign(std::size_t(n), Vec3{});
    const double cy = std::cos(yaw), sy = std::sin(yaw);
    for (int iv = 0; iv < p.nv; ++iv) {
      for (int iu = 0; iu < p.nu; ++iu) {
        const double u = (double(iu) / (p.nu - 1) - 0.5) * p.width;
        const double v = (double(iv) / (p.nv - 1) - 0.5) * p.height;
        c.positions_[std::size_t(c.index(iu, iv))] =
            Vec3{center.x + u * cy - v * sy, center.y + u * sy + v * cy, center.z};
      }
    }
    auto add = [&](int a, int b, double k, SpringKind kind) {
      Spring s;
      s.a = a;
      s.b = b;
      s.rest = (c.positions_[std::size_t(a)] - c.positions_[std::size_t(b)]).norm();
      s.stiffness = k;
      s.damping = p.spring_damping;
      s.kind = kind;
      c.springs_.push_back(s);
    };
    for (int iv = 0; iv < p.nv; ++iv) {
      for (int iu = 0; iu < p.nu; ++iu) {
        const int i = c.index(iu, iv);
        if (iu + 1 < p.nu) add(i, c.index(iu + 1, iv), p.k_structural, SpringKind::structural);
        if (iv + 1 < p.nv) add(i, c.index(iu, iv + 1), p.k_structural, SpringKind::structural);
        if (iu + 1 < p.nu && iv + 1 < p.nv) {
          add(i, c.index(iu + 1, iv + 1), p.k_shear, SpringKind::shear);
          add(c.index(iu + 1, iv), c.index(iu, iv + 1), p.k_shear, SpringKind::shear);
        }
        if (iu + 2 < p.nu) add(i, c.index(iu + 2, iv), p.k_bend, SpringKind::bend);
        if (iv + 2 < p.nv) add(i, c.index(iu, iv + 2), p.k_bend, SpringKind::bend);
      }
    }
    return c;
  }

  const ClothParams& params() const { return params_; }
  int node_count() const { return params_.nu * params_.nv; }
  int index(int iu, int iv) const { return iv * params_.nu + iu; }

  std::vector<Vec3>& positions() { return positions_; }
  const std::vector<Vec3>& positions() const { return positions_; }
  std::vector<Vec3>& velocities() { return velocities_; }
  const std::vector<Vec3>& velocities() const { return velocities_; }
  std::vector<Spring>& springs() { return springs_; }
  const std::vector<Spring>& springs() const { return springs_; }

  /// Grid-corner nodes in fixed order: (0,0), (nu-1,0), (nu-1,nv-1),
  /// (0,nv-1) — counter-clockwise when the flat cloth is seen from +z.
  std::array<int, 4> corner_indices() const {
    return {index(0, 0), index(params_.nu - 1, 0), index(params_.nu - 1, params_.nv - 1),
            index(0, params_.nv - 1)};
  }
  std::array<Vec3, 4> corners() const {
    const auto idx = corner_indices();
    return {positions_[std::size_t(idx[0])], positions_[std::size_t(idx[1])],
            positions_[std::size_t(idx[2])], positions_[std::size_t(idx[3])]};
  }

  double spring_potential() const {
    double e = 0.0;
    for (const auto& s : springs_) {
      const double len = (positions_[std::size_t(s.b)] - positions_[std::size_t(s.a)]).norm();
      const double d = len - s.rest;
      e += 0.5 * s.stiffness * d * d;
    }
    return e;
  }

  double kinetic_energy() const {
    double e = 0.0;
    for (const auto& v : velocities_) e += 0.5 * params_.node_mass * v.squared_norm();
    return e;
  }

 private:
  ClothParams params_;
  std::vector<Vec3> positions_;
  std::vector<Vec3> velocities_;
  std::vector<Spring> springs_;
};

}  // namespace clothrl::sim
