#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "clothrl/core/container.hpp"
#include "clothrl/core/errors.hpp"
#include "clothrl/core/rng.hpp"
#include "clothrl/core/vec3.hpp"
#include "clothrl/sim/cloth.hpp"
#include "clothrl/sim/gripper.hpp"
#include "clothrl/sim/rigid.hpp"

namespace clothrl::sim {

struct Aabb {
  Vec3 lo, hi;
  Vec3 clamp(const Vec3& p) const {
    return {std::clamp(p.x, lo.x, hi.x), std::clamp(p.y, lo.y, hi.y),
            std::clamp(p.z, lo.z, hi.z)};
  }
};

struct WorldParams {
  double gravity = 9.81;          // m/s^2, +z up
  double grasp_radius = 0.015;    // m from the gripper endpoint to a node
  double grasp_fail_prob = 0.05;  // injected failure on mechanical contact
  std::optional<Aabb> workspace;  // gripper clamp, when set
};

/// Deterministic mass-spring world: cloth, table plane, optional hanger box,
/// anchor-based grasping. Integration is semi-implicit Euler with substeps;
/// anchored nodes are overwritten to their gripper-frame targets at the end
/// of every substep, so the constraint holds regardless of other forces.
class ClothWorld {
 public:
  Cloth cloth;
  Gripper gripper;
  RigidSet rigid;
  std::vector<Anchor> anchors;
  WorldParams params;

  /// Advances dt seconds in `substeps` equal substeps.
  void step(double dt, int substeps) {
    if (!(dt > 0.0)) throw std::invalid_argument("world: dt must be positive");
    if (substeps < 1) throw std::invalid_argument("world: substeps must be >= 1");
    const double h = dt / substeps;
    for (int s = 0; s < substeps; ++s) substep(h);
  }

  /// Grasp attempt at the gripper endpoint. Returns the created anchors;
  /// empty on a mechanical miss (no node within the proximity radius) or on
  /// the injected stochastic failure.
  std::vector<Anchor> attempt_grasp(Rng& rng) {
    gripper.state = GripState::closing;
    const auto& x = cloth.positions();
    const Vec3 tip = gripper.position;
    double best = params.grasp_radius;
    int hit = -1;
    for (int i = 0; i < cloth.node_count(); ++i) {
      const double d = (x[std::size_t(i)] - tip).norm();
      if (d <= best) {
        best = d;
        hit = i;
      }
    }
    if (hit < 0) return {};
    if (rng.bernoulli(params.grasp_fail_prob)) return {};

    // one anchor at the fingertip middle, one at each extremity
    const Vec3 axis = gripper.fingertip_dir();
    const double half = gripper.fingertip_length / 2.0;
    const Vec3 targets[3] = {tip, tip - axis * half, tip + axis * half};
    anchors.clear();
    for (const Vec3& t : targets) {
      double dmin = std::numeric_limits<double>::infinity();
      int node = 0;
      for (int i = 0; i < cloth.node_count(); ++i) {
        const double d = (x[std::size_t(i)] - t).squared_norm();
        if (d < dmin) {
          dmin = d;
          node = i;
        }
      }
      anchors.push_back({node, x[std::size_t(node)] - gripper.position});
    }
    gripper.state = GripState::holding;
    return anchors;
  }

  /// Drops all anchors; nodes keep their current position and velocity.
  void release() {
    anchors.clear();
    gripper.state = GripState::open;
  }

  std::array<Vec3, 4> corners() const { return cloth.corners(); }

  double total_energy() const { return cloth.spring_potential() + cloth.kinetic_energy(); }

  void save(Container& c, const std::string& prefix) const {
    const auto& p = cloth.params();
    c.put_i64(prefix + "grid", {2}, {p.nu, p.nv});
    c.put_f64(prefix + "cloth_params", {8},
              {p.width, p.height, p.node_mass, p.k_structural, p.k_shear, p.k_bend,
               p.spring_damping, p.global_damping});
    auto pack = [](const std::vector<Vec3>& v) {
      std::vector<double> out;
      out.reserve(v.size() * 3);
      for (const auto& x : v) {
        out.push_back(x.x);
        out.push_back(x.y);
        out.push_back(x.z);
      }
      return out;
    };
    c.put_f64(prefix + "positions", {std::uint64_t(cloth.node_count()), 3},
              pack(cloth.positions()));
    c.put_f64(prefix + "velocities", {std::uint64_t(cloth.node_count()), 3},
              pack(cloth.velocities()));
    std::vector<std::int64_t> sint;
    std::vector<double> sdbl;
    for (const auto& s : cloth.springs()) {
      sint.push_back(s.a);
      sint.push_back(s.b);
      sint.push_back(std::int64_t(s.kind));
      sdbl.push_back(s.rest);
      sdbl.push_back(s.stiffness);
      sdbl.push_back(s.damping);
    }
    c.put_i64(prefix + "springs_int", {cloth.springs().size(), 3}, sint);
    c.put_f64(prefix + "springs_f64", {cloth.springs().size(), 3}, sdbl);

    std::vector<std::int64_t> aint;
    std::vector<double> adbl;
    for (const auto& a : anchors) {
      aint.push_back(a.node);
      adbl.push_back(a.offset.x);
      adbl.push_back(a.offset.y);
      adbl.push_back(a.offset.z);
    }
    c.put_i64(prefix + "anchor_nodes", {anchors.size()}, aint);
    c.put_f64(prefix + "anchor_offsets", {anchors.size(), 3}, adbl);

    c.put_f64(prefix + "gripper", {8},
              {gripper.position.x, gripper.position.y, gripper.position.z, gripper.velocity.x,
               gripper.velocity.y, gripper.velocity.z, gripper.aperture,
               gripper.fingertip_length});
    c.put_i64(prefix + "gripper_state", {2},
              {std::int64_t(gripper.state), std::int64_t(gripper.finger_axis)});

    c.put_f64(prefix + "table", {2}, {rigid.table.height, rigid.table.friction});
    if (rigid.hanger) {
      const auto& hb = *rigid.hanger;
      c.put_f64(prefix + "hanger", {6},
                {hb.center.x, hb.center.y, hb.center.z, hb.half_extents.x, hb.half_extents.y,
                 hb.half_extents.z});
    }
    if (rigid.tape)
      c.put_f64(prefix + "tape", {3}, {rigid.tape->y, rigid.tape->x_min, rigid.tape->x_max});
    c.put_f64(prefix + "world_params", {3},
              {params.gravity, params.grasp_radius, params.grasp_fail_prob});
  }

  static ClothWorld load(const Container& c, const std::string& prefix) {
    ClothWorld w;
    const auto& grid = c.i64(prefix + "grid");
    const auto& cp = c.f64(prefix + "cloth_params");
    ClothParams p;
    p.nu = int(grid.at(0));
    p.nv = int(grid.at(1));
    p.width = cp.at(0);
    p.height = cp.at(1);
    p.node_mass = cp.at(2);
    p.k_structural = cp.at(3);
    p.k_shear = cp.at(4);
    p.k_bend = cp.at(5);
    p.spring_damping = cp.at(6);
    p.global_damping = cp.at(7);
    w.cloth = Cloth::make_flat(p, Vec3{0, 0, 0});
    auto unpack = [](const std::vector<double>& v) {
      std::vector<Vec3> out(v.size() / 3);
      for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = Vec3{v[3 * i], v[3 * i + 1], v[3 * i + 2]};
      return out;
    };
    w.cloth.positions() = unpack(c.f64(prefix + "positions"));
    w.cloth.velocities() = unpack(c.f64(prefix + "velocities"));
    const auto& sint = c.i64(prefix + "springs_int");
    const auto& sdbl = c.f64(prefix + "springs_f64");
    w.cloth.springs().clear();
    for (std::size_t i = 0; i * 3 < sint.size(); ++i) {
      Spring s;
      s.a = int(sint[3 * i]);
      s.b = int(sint[3 * i + 1]);
      s.kind = SpringKind(sint[3 * i + 2]);
      s.rest = sdbl[3 * i];
      s.stiffness = sdbl[3 * i + 1];
      s.damping = sdbl[3 * i + 2];
      w.cloth.springs().push_back(s);
    }
    const auto& an = c.i64(prefix + "anchor_nodes");
    const auto& ao = c.f64(prefix + "anchor_offsets");
    for (std::size_t i = 0; i < an.size(); ++i)
      w.anchors.push_back({int(an[i]), Vec3{ao[3 * i], ao[3 * i + 1], ao[3 * i + 2]}});

    const auto& g = c.f64(prefix + "gripper");
    w.gripper.position = {g.at(0), g.at(1), g.at(2)};
    w.gripper.velocity = {g.at(3), g.at(4), g.at(5)};
    w.gripper.aperture = g.at(6);
    w.gripper.fingertip_length = g.at(7);
    const auto& gs = c.i64(prefix + "gripper_state");
    w.gripper.state = GripState(gs.at(0));
    w.gripper.finger_axis = FingerAxis(gs.at(1));

    const auto& tb = c.f64(prefix + "table");
    w.rigid.table = {tb.at(0), tb.at(1)};
    if (c.contains(prefix + "hanger")) {
      const auto& hb = c.f64(prefix + "hanger");
      w.rigid.hanger = HangerBox{{hb.at(0), hb.at(1), hb.at(2)}, {hb.at(3), hb.at(4), hb.at(5)}};
    }
    if (c.contains(prefix + "tape")) {
      const auto& tp = c.f64(prefix + "tape");
      w.rigid.tape = TapeMark{tp.at(0), tp.at(1), tp.at(2)};
    }
    const auto& wp = c.f64(prefix + "world_params");
    w.params.gravity = wp.at(0);
    w.params.grasp_radius = wp.at(1);
    w.params.grasp_fail_prob = wp.at(2);
    return w;
  }

 private:
  void substep(double h) {
    auto& x = cloth.positions();
    auto& v = cloth.velocities();
    const auto& p = cloth.params();
    const int n = cloth.node_count();

    // gripper moves kinematically
    gripper.position += gripper.velocity * h;
    if (params.workspace) gripper.position = params.workspace->clamp(gripper.position);

    forces_.assign(std::size_t(n), Vec3{0.0, 0.0, -params.gravity * p.node_mass});
    for (const auto& s : cloth.springs()) {
      const Vec3 d = x[std::size_t(s.b)] - x[std::size_t(s.a)];
      const double len = d.norm();
      if (len < 1e-12) continue;
      const Vec3 dir = d / len;
      const double rel = (v[std::size_t(s.b)] - v[std::size_t(s.a)]).dot(dir);
      const double mag = s.stiffness * (len - s.rest) + s.damping * rel;
      const Vec3 f = dir * mag;
      forces_[std::size_t(s.a)] += f;
      forces_[std::size_t(s.b)] -= f;
    }

    const double decay = std::max(0.0, 1.0 - p.global_damping * h);
    for (int i = 0; i < n; ++i) {
      Vec3& vel = v[std::size_t(i)];
      vel += forces_[std::size_t(i)] * (h / p.node_mass);
      vel *= decay;
      x[std::size_t(i)] += vel * h;
    }

    // table plane: project, kill inward normal velocity, Coulomb tangent
    for (int i = 0; i < n; ++i) {
      Vec3& pos = x[std::size_t(i)];
      if (pos.z < rigid.table.height) {
        pos.z = rigid.table.height;
        Vec3& vel = v[std::size_t(i)];
        double jn = 0.0;
        if (vel.z < 0.0) {
          jn = -vel.z;
          vel.z = 0.0;
        }
        apply_friction(vel.x, vel.y, rigid.table.friction * jn);
      }
    }

    if (rigid.hanger) resolve_hanger(*rigid.hanger);

    // anchors are honoured regardless of other forces
    for (const auto& a : anchors) {
      x[std::size_t(a.node)] = gripper.position + a.offset;
      v[std::size_t(a.node)] = gripper.velocity;
    }

    for (int i = 0; i < n; ++i) {
      if (!x[std::size_t(i)].finite() || !v[std::size_t(i)].finite())
        throw SimInstabilityError("world: cloth node " + std::to_string(i) +
                                  " became non-finite");
    }
  }

  static void apply_friction(double& vx, double& vy, double max_dv) {
    const double vt = std::sqrt(vx * vx + vy * vy);
    if (vt <= max_dv) {
      vx = 0.0;
      vy = 0.0;
    } else if (vt > 0.0) {
      const double scale = (vt - max_dv) / vt;
      vx *= scale;
      vy *= scale;
    }
  }

  void resolve_hanger(const HangerBox& hb) {
    auto& x = cloth.positions();
    auto& v = cloth.velocities();
    for (int i = 0; i < cloth.node_count(); ++i) {
      Vec3& pos = x[std::size_t(i)];
      const Vec3 d = pos - hb.center;
      const double px = hb.half_extents.x - std::abs(d.x);
      const double py = hb.half_extents.y - std::abs(d.y);
      const double pz = hb.half_extents.z - std::abs(d.z);
      if (px <= 0.0 || py <= 0.0 || pz <= 0.0) continue;
      Vec3& vel = v[std::size_t(i)];
      // push out through the shallowest face
      if (pz <= px && pz <= py) {
        const double sign = d.z >= 0.0 ? 1.0 : -1.0;
        pos.z = hb.center.z + sign * hb.half_extents.z;
        double jn = 0.0;
        if (vel.z * sign < 0.0) {
          jn = std::abs(vel.z);
          vel.z = 0.0;
        }
        apply_friction(vel.x, vel.y, rigid.table.friction * jn);
      } else if (py <= px) {
        const double sign = d.y >= 0.0 ? 1.0 : -1.0;
        pos.y = hb.center.y + sign * hb.half_extents.y;
        double jn = 0.0;
        if (vel.y * sign < 0.0) {
          jn = std::abs(vel.y);
          vel.y = 0.0;
        }
        apply_friction(vel.x, vel.z, rigid.table.friction * jn);
      } else {
        const double sign = d.x >= 0.0 ? 1.0 : -1.0;
        pos.x = hb.center.x + sign * hb.half_extents.x;
        double jn = 0.0;
        if (vel.x * sign < 0.0) {
          jn = std::abs(vel.x);
          vel.x = 0.0;
        }
        apply_friction(vel.y, vel.z, rigid.table.friction * jn);
      }
    }
  }

  std::vector<Vec3> forces_;
};

}  // namespace clothrl::sim
