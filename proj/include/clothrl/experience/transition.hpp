#pragma once

#include <array>
#include <cmath>
#include <vector>

namespace clothrl::experience {

/// One environment step. `actor_obs` is the deployable observation (low-dim
/// gripper pose + aperture + task feature, plus an optional flattened
/// 84x84x3 image); `full_state` is the privileged simulator state fed to the
/// critic and used as the source of auxiliary targets.
struct Transition {
  std::vector<double> actor_obs;
  std::vector<double> actor_image;  // empty unless the obs mode includes images
  std::vector<double> full_state;
  std::array<double, 4> action{};   // components in [-1, 1]
  double reward = 0.0;              // sparse: 0 or +100
  std::vector<double> next_actor_obs;
  std::vector<double> next_actor_image;
  std::vector<double> next_full_state;
  bool done = false;
  bool is_demo = false;
};

/// Precomputed N-step window starting at some transition. `horizon` is
/// k = min(N, steps until the episode ended); `discounted_return` is
/// sum_{i<k} gamma^i r_{t+i}; the tail fields describe the state at t+k.
struct NStepSegment {
  Transition head;
  double discounted_return = 0.0;
  int horizon = 1;
  std::vector<double> tail_obs;
  std::vector<double> tail_image;
  std::vector<double> tail_state;
  bool tail_done = false;
};

}  // namespace clothrl::experience
