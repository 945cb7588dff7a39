#pragma once

#include <algorithm>
#include <array>
#include <cmath>

#include "clothrl/core/vec3.hpp"
#include "clothrl/env/env.hpp"

namespace clothrl::env {

/// Waypoint state machine that solves each task from privileged simulator
/// state, used to record demonstrations. Emits clipped velocity commands and
/// retries once after a failed grasp.
class ScriptedPolicy {
 public:
  explicit ScriptedPolicy(Task task) : task_(task) {}

  void begin_episode(const ClothEnv& env) {
    phase_ = Phase::approach;
    retried_ = false;
    const auto& world = env.world();
    grasp_target_ = grasp_point(env);
    if (task_ == Task::diagonal_folding) {
      const auto c = world.corners();
      fold_from_ = c[0];
      fold_to_ = c[2];
    }
  }

  std::array<double, 4> act(const ClothEnv& env) {
    const auto& world = env.world();
    const Vec3 g = world.gripper.position;
    const double aperture = world.gripper.aperture;
    const bool holding = world.gripper.state == sim::GripState::holding;

    std::array<double, 4> a{0.0, 0.0, 0.0, 0.0};
    switch (phase_) {
      case Phase::approach: {
        const Vec3 target{grasp_target_.x, grasp_target_.y, kHoverZ};
        move(a, g, target);
        if (close_to(g, target, 0.006)) phase_ = Phase::descend;
        break;
      }
      case Phase::descend: {
        const Vec3 target{grasp_target_.x, grasp_target_.y, kGraspZ};
        move(a, g, target);
        if (close_to(g, target, 0.003)) phase_ = Phase::close;
        break;
      }
      case Phase::close: {
        a[3] = 1.0;
        if (holding) {
          phase_ = Phase::lift;
        } else if (aperture <= 0.02) {
          if (!retried_) {
            retried_ = true;
            phase_ = Phase::reopen;
          } else {
            phase_ = Phase::lift;  // give up; the episode will simply fail
          }
        }
        break;
      }
      case Phase::reopen: {
        a[3] = -1.0;
        if (aperture >= 0.35) {
          grasp_target_ = grasp_point(env);
          phase_ = Phase::descend;
        }
        break;
      }
      case Phase::lift: {
        const Vec3 target{g.x, g.y, lift_z()};
        move(a, g, target);
        if (holding) a[3] = 0.25;  // keep the fingers closed while carrying
        if (close_to(g, target, 0.008)) phase_ = Phase::traverse;
        break;
      }
      case Phase::traverse: {
        const Vec3 target = carry_target(env);
        move(a, g, target);
        if (holding) a[3] = 0.25;
        if (close_to(g, target, 0.008)) phase_ = Phase::lower;
        break;
      }
      case Phase::lower: {
        const Vec3 target = place_target(env);
        move(a, g, target);
        if (holding) a[3] = 0.25;
        if (close_to(g, target, 0.006)) phase_ = Phase::open;
        break;
      }
      case Phase::open: {
        a[3] = -1.0;
        if (aperture >= 0.95) phase_ = Phase::retreat;
        break;
      }
      case Phase::retreat: {
        const Vec3 target = retreat_target(env);
        move(a, g, target);
        a[3] = -0.2;
        break;
      }
    }
    for (double& v : a) v = std::clamp(v, -1.0, 1.0);
    return a;
  }

 private:
  enum class Phase { approach, descend, close, reopen, lift, traverse, lower, open, retreat };

  // gain 18 with max speed 0.5 m/s at 10 Hz closes 90% of the remaining gap
  // per tick without overshoot
  static constexpr double kHoverZ = 0.10;
  static constexpr double kGraspZ = 0.008;
  static constexpr double kGain = 18.0;

  static bool close_to(const Vec3& a, const Vec3& b, double tol) {
    return (a - b).norm() < tol;
  }

  static void move(std::array<double, 4>& a, const Vec3& from, const Vec3& to) {
    a[0] = std::clamp(kGain * (to.x - from.x), -1.0, 1.0);
    a[1] = std::clamp(kGain * (to.y - from.y), -1.0, 1.0);
    a[2] = std::clamp(kGain * (to.z - from.z), -1.0, 1.0);
  }

  Vec3 grasp_point(const ClothEnv& env) const {
    const auto& cloth = env.world().cloth;
    const int nu = cloth.params().nu, nv = cloth.params().nv;
    switch (task_) {
      case Task::tape:
        // middle of the lifted (y-min) edge
        return cloth.positions()[std::size_t(cloth.index(nu / 2, 0))];
      case Task::hanging:
        // middle of the edge closest to the hanger (+y)
        return cloth.positions()[std::size_t(cloth.index(nu / 2, nv - 1))];
      case Task::diagonal_folding:
      default:
        return cloth.positions()[std::size_t(cloth.index(0, 0))];
    }
  }

  double lift_z() const {
    switch (task_) {
      case Task::tape: return 0.14;
      case Task::hanging: return 0.36;
      default: return 0.16;
    }
  }

  Vec3 carry_target(const ClothEnv& env) const {
    switch (task_) {
      case Task::tape:
        return {grasp_target_.x, env.tape_y(), lift_z()};
      case Task::hanging: {
        const auto& hb = *env.world().rigid.hanger;
        return {0.0, hb.center.y + 0.13, lift_z()};
      }
      case Task::diagonal_folding:
      default: {
        Vec3 dir = fold_to_ - fold_from_;
        dir.z = 0.0;
        dir = dir.normalized();
        const Vec3 land = fold_to_ + dir * 0.02;
        return {land.x, land.y, lift_z()};
      }
    }
  }

  Vec3 place_target(const ClothEnv& env) const {
    const Vec3 c = carry_target(env);
    switch (task_) {
      case Task::tape: return {c.x, c.y, 0.02};
      case Task::hanging: {
        const auto& hb = *env.world().rigid.hanger;
        return {c.x, c.y, hb.center.z + hb.half_extents.z + 0.05};
      }
      default: return {c.x, c.y, 0.025};
    }
  }

  Vec3 retreat_target(const ClothEnv& env) const {
    const Vec3 g = env.world().gripper.position;
    if (task_ == Task::hanging) {
      const auto& hb = *env.world().rigid.hanger;
      return {g.x, hb.center.y - 0.2, 0.4};
    }
    return {g.x, g.y, 0.18};
  }

  Task task_;
  Phase phase_ = Phase::approach;
  bool retried_ = false;
  Vec3 grasp_target_, fold_from_, fold_to_;
};

}  // namespace clothrl::env
