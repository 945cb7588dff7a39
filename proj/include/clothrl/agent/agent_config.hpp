#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "clothrl/approx/target_pair.hpp"

namespace clothrl::agent {

/// Every extension is independently toggleable; with all toggles off (and
/// target_delay 1, reset_demo_prob 0, pretrain_steps 0) the learner reduces
/// to vanilla DDPG with critic L2 regularization.
struct AgentToggles {
  bool twin_critic = true;
  bool prioritized = true;
  bool nstep = true;
  bool bc_loss = true;
  bool q_filter = true;
  bool aux_outputs = true;
  bool asymmetric = true;
  bool pretrain = true;
  bool reset_demo = true;
};

struct AgentConfig {
  double gamma = 0.98;
  int nstep_n = 5;
  double lambda_nstep = 1.0;
  double lambda_1step = 1.0;
  double lambda_l2 = 1e-5;
  double lambda_bc = 1.0;
  std::vector<double> aux_weights;  // per aux component; empty means all 1
  double sigma_explore = 0.1;
  int batch_size = 64;
  int pretrain_steps = 2000;
  double reset_demo_prob = 0.2;
  int target_delay = 2;
  AgentToggles toggles;

  std::vector<int> critic_hidden = {256, 256};
  std::vector<int> actor_hidden = {256, 256};
  double critic_lr = 1e-3;
  double actor_lr = 1e-4;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
  // polyak every step; hard copy every target_delay calls when set to hard.
  // Demo-only pretraining diverges with near-live hard targets, so polyak
  // is the default.
  approx::TargetMode target_mode = approx::TargetMode::polyak;
  double polyak_tau = 0.005;
  double actor_final_scale = 0.01;

  void validate() const {
    if (!(gamma > 0.0) || gamma >= 1.0)
      throw std::invalid_argument("agent: gamma must be in (0, 1)");
    if (nstep_n < 1) throw std::invalid_argument("agent: nstep_n must be >= 1");
    auto nonneg = [](double v, const char* n) {
      if (!(v >= 0.0) || !std::isfinite(v))
        throw std::invalid_argument(std::string("agent: ") + n + " must be finite and >= 0");
    };
    nonneg(lambda_nstep, "lambda_nstep");
    nonneg(lambda_1step, "lambda_1step");
    nonneg(lambda_l2, "lambda_l2");
    nonneg(lambda_bc, "lambda_bc");
    nonneg(sigma_explore, "sigma_explore");
    for (double w : aux_weights) nonneg(w, "aux_weights[]");
    if (batch_size < 1) throw std::invalid_argument("agent: batch_size must be >= 1");
    if (pretrain_steps < 0) throw std::invalid_argument("agent: pretrain_steps must be >= 0");
    if (reset_demo_prob < 0.0 || reset_demo_prob > 1.0)
      throw std::invalid_argument("agent: reset_demo_prob must be in [0, 1]");
    if (target_delay < 1) throw std::invalid_argument("agent: target_delay must be >= 1");
  }
};

/// What the environment should do at the next reset.
struct ResetDirective {
  enum class Kind { standard, demo_snapshot };
  Kind kind = Kind::standard;
  std::size_t snapshot_index = 0;
};

}  // namespace clothrl::agent
