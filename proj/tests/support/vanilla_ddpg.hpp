#pragma once

// Independently coded vanilla DDPG loss reference. It reads network weights
// from the public checkpoint container format and evaluates everything with
// its own plain loops, so it shares no forward-pass code with the library.
//
//   critic loss = mean_i (Q(s_i,a_i) - r_i - (1-d_i) gamma Q*(s'_i, pi*(o'_i)))^2
//                 + lambda_l2 * sum(theta_Q^2)
//   actor loss  = -mean_i Q(s_i, pi(o_i))

#include <cmath>
#include <string>
#include <vector>

#include "clothrl/core/container.hpp"

namespace vanilla_ref {

struct Layer {
  int in = 0, out = 0;
  std::vector<double> w;  // row-major [out][in]
  std::vector<double> b;
  enum class Act { identity, relu, tanh } act = Act::identity;
};

struct Mlp {
  std::vector<Layer> layers;

  std::vector<double> forward(std::vector<double> x) const {
    for (const auto& l : layers) {
      std::vector<double> y(l.out, 0.0);
      for (int o = 0; o < l.out; ++o) {
        double acc = l.b[std::size_t(o)];
        for (int i = 0; i < l.in; ++i) acc += l.w[std::size_t(o) * l.in + i] * x[std::size_t(i)];
        switch (l.act) {
          case Layer::Act::relu:
            y[std::size_t(o)] = acc > 0.0 ? acc : 0.0;
            break;
          case Layer::Act::tanh:
            y[std::size_t(o)] = std::tanh(acc);
            break;
          default:
            y[std::size_t(o)] = acc;
        }
      }
      x = std::move(y);
    }
    return x;
  }

  double sum_squared_params() const {
    double s = 0.0;
    for (const auto& l : layers) {
      for (double v : l.w) s += v * v;
      for (double v : l.b) s += v * v;
    }
    return s;
  }
};

inline Mlp load_mlp(const clothrl::Container& c, const std::string& prefix,
                    const std::vector<Layer::Act>& acts) {
  Mlp mlp;
  for (std::size_t l = 0; l < acts.size(); ++l) {
    const std::string base = prefix + "L" + std::to_string(l) + "/";
    Layer layer;
    const auto& entry = c.at(base + "W");
    layer.out = int(entry.shape.at(0));
    layer.in = int(entry.shape.at(1));
    layer.w = entry.f64;
    layer.b = c.f64(base + "b");
    layer.act = acts[l];
    mlp.layers.push_back(std::move(layer));
  }
  return mlp;
}

/// Actor = trunk (all relu) + tanh action head, as stored by the library's
/// checkpoint writer under <prefix>trunk/ and <prefix>action/.
struct Actor {
  Mlp trunk, head;
  std::vector<double> act(const std::vector<double>& obs) const {
    return head.forward(trunk.forward(obs));
  }
};

inline Actor load_actor(const clothrl::Container& c, const std::string& prefix,
                        std::size_t trunk_layers) {
  Actor a;
  a.trunk = load_mlp(c, prefix + "trunk/",
                     std::vector<Layer::Act>(trunk_layers, Layer::Act::relu));
  a.head = load_mlp(c, prefix + "action/", {Layer::Act::tanh});
  return a;
}

struct Sample {
  std::vector<double> state;       // critic input state
  std::vector<double> obs;         // actor input
  std::vector<double> action;      // 4
  double reward = 0.0;
  bool done = false;
  std::vector<double> next_state;
  std::vector<double> next_obs;
};

inline std::vector<double> cat(const std::vector<double>& a, const std::vector<double>& b) {
  std::vector<double> out = a;
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

inline double critic_loss(const Mlp& critic, const Mlp& critic_target, const Actor& actor_target,
                          const std::vector<Sample>& batch, double gamma, double lambda_l2) {
  double total = 0.0;
  for (const auto& s : batch) {
    const double q = critic.forward(cat(s.state, s.action))[0];
    const double q_next =
        critic_target.forward(cat(s.next_state, actor_target.act(s.next_obs)))[0];
    const double y = s.reward + gamma * (s.done ? 0.0 : 1.0) * q_next;
    const double e = q - y;
    total += e * e / double(batch.size());
  }
  return total + lambda_l2 * critic.sum_squared_params();
}

inline double actor_loss(const Mlp& critic, const Actor& actor,
                         const std::vector<Sample>& batch) {
  double total = 0.0;
  for (const auto& s : batch)
    total += -critic.forward(cat(s.state, actor.act(s.obs)))[0] / double(batch.size());
  return total;
}

}  // namespace vanilla_ref
