#pragma once

#include "clothrl/core/vec3.hpp"

namespace clothrl::sim {

enum class GripState { open, closing, holding };
enum class FingerAxis { x, y };

/// Bounded free-flying kinematic point with an aperture. Aperture 1 is fully
/// open, 0 fully closed; closing commands decrease it.
struct Gripper {
  Vec3 position;
  Vec3 velocity;                   // commanded, m/s
  double aperture = 1.0;           // in [0, 1]
  GripState state = GripState::open;
  FingerAxis finger_axis = FingerAxis::x;
  double fingertip_length = 0.04;  // m, anchors at the middle and extremities

  Vec3 fingertip_dir() const {
    return finger_axis == FingerAxis::x ? Vec3{1.0, 0.0, 0.0} : Vec3{0.0, 1.0, 0.0};
  }
};

/// Hard kinematic constraint binding a cloth node to a gripper-frame offset.
struct Anchor {
  int node = 0;
  Vec3 offset;  // node position minus gripper position at grasp time
};

}  // namespace clothrl::sim
