#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

#include "clothrl/experience/transition.hpp"

namespace clothrl::experience {

/// Builds the N-step segment for the transition at index `t` of a closed
/// episode. The window is truncated at the episode's terminal step; with
/// N=1 the segment is exactly the 1-step transition (return r_t, tail =
/// the head's successor).
inline NStepSegment assemble_nstep(const std::vector<Transition>& episode, std::size_t t,
                                   int n, double gamma) {
  if (t >= episode.size()) throw std::out_of_range("assemble_nstep: t out of range");
  if (n < 1) throw std::invalid_argument("assemble_nstep: N must be >= 1");
  if (!(gamma > 0.0) || gamma > 1.0)
    throw std::invalid_argument("assemble_nstep: gamma must be in (0, 1]");

  NStepSegment seg;
  seg.head = episode[t];
  seg.discounted_return = 0.0;
  double g = 1.0;
  std::size_t i = t;
  int k = 0;
  for (; k < n && i < episode.size(); ++i) {
    seg.discounted_return += g * episode[i].reward;
    g *= gamma;
    ++k;
    if (episode[i].done) break;
  }
  const Transition& last = episode[t + std::size_t(k) - 1];
  seg.horizon = k;
  seg.tail_obs = last.next_actor_obs;
  seg.tail_image = last.next_actor_image;
  seg.tail_state = last.next_full_state;
  seg.tail_done = last.done;
  return seg;
}

/// Segments for every step of a closed episode, in order.
inline std::vector<NStepSegment> assemble_episode(const std::vector<Transition>& episode,
                                                  int n, double gamma) {
  std::vector<NStepSegment> out;
  out.reserve(episode.size());
  for (std::size_t t = 0; t < episode.size(); ++t)
    out.push_back(assemble_nstep(episode, t, n, gamma));
  return out;
}

}  // namespace clothrl::experience
