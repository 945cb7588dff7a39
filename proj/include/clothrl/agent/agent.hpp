#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "clothrl/agent/agent_config.hpp"
#include "clothrl/approx/actor_network.hpp"
#include "clothrl/approx/adam.hpp"
#include "clothrl/approx/network.hpp"
#include "clothrl/approx/target_pair.hpp"
#include "clothrl/core/container.hpp"
#include "clothrl/core/errors.hpp"
#include "clothrl/core/rng.hpp"
#include "clothrl/experience/replay_buffer.hpp"

namespace clothrl::agent {

using approx::ActorNetwork;
using approx::ActorSpec;
using approx::Adam;
using approx::DenseNetwork;
using approx::TargetPair;
using experience::NStepSegment;
using experience::PrioritizedBuffer;
using experience::SampleBatch;

/// Observation/state dimensionalities plus which full-state components form
/// the auxiliary prediction targets (cloth corners and the task feature).
struct AgentDims {
  int actor_lowdim = 0;
  int image_h = 0, image_w = 0, image_c = 0;
  int full_state = 0;
  int action = 4;
  std::vector<int> aux_indices;

  bool has_image() const { return image_h > 0 && image_w > 0 && image_c > 0; }
  int aux_dim() const { return int(aux_indices.size()); }
};

/// Twin-critic DDPG-variant learner: mixed 1-step/N-step critic targets with
/// the pointwise critic minimum, Q-filtered behavioural cloning, auxiliary
/// feature prediction, priority feedback to the replay buffer, exploration
/// noise, demo pre-training and reset-to-demonstration scheduling.
class Agent {
 public:
  struct CriticUpdateResult {
    std::vector<double> per_sample_1step;  // squared errors, pre-weighting
    std::vector<double> per_sample_nstep;
    double mean_1step = 0.0;            // unweighted means over the batch
    double mean_nstep = 0.0;
    double weighted_objective = 0.0;    // full loss of critic 1 incl. L2
  };

  struct ActorUpdateResult {
    double total = 0.0;
    double pg = 0.0;   // -mean w_i Q1(s, pi(o))
    double bc = 0.0;
    double aux = 0.0;
    int bc_active = 0;  // demo samples that passed the Q-filter
  };

  struct StepInfo {
    double critic_1step = 0.0;
    double critic_nstep = 0.0;
    double actor = 0.0;
    double bc = 0.0;
    double aux = 0.0;
    bool actor_updated = false;
    double demo_fraction = 0.0;
  };

  Agent(AgentConfig cfg, AgentDims dims, Rng rng)
      : cfg_(std::move(cfg)), dims_(std::move(dims)), rng_(rng.derive("agent")) {
    cfg_.validate();
    if (dims_.full_state <= 0) throw std::invalid_argument("agent: full_state dim required");
    if (!cfg_.toggles.asymmetric && dims_.has_image())
      throw ConfigError("agent: symmetric critic is only supported for low-dim observations");
    if (cfg_.toggles.aux_outputs && dims_.aux_indices.empty())
      throw ConfigError("agent: aux_outputs enabled but no aux target indices configured");
    for (int idx : dims_.aux_indices)
      if (idx < 0 || idx >= dims_.full_state)
        throw std::invalid_argument("agent: aux index out of full_state range");
    if (!cfg_.aux_weights.empty() && int(cfg_.aux_weights.size()) != dims_.aux_dim())
      throw std::invalid_argument("agent: aux_weights size mismatch");
    aux_w_ = cfg_.aux_weights.empty() ? std::vector<double>(dims_.aux_indices.size(), 1.0)
                                      : cfg_.aux_weights;

    Rng init = rng.derive("init");
    const int critic_in = critic_state_dim() + dims_.action;
    auto critic_spec = DenseNetwork::mlp_spec(critic_in, cfg_.critic_hidden, 1,
                                              approx::Activation::relu,
                                              approx::Activation::identity);
    critic1_ = TargetPair<DenseNetwork>(DenseNetwork(critic_spec, init), cfg_.target_mode,
                                        cfg_.target_delay, cfg_.polyak_tau);
    if (cfg_.toggles.twin_critic)
      critic2_ = TargetPair<DenseNetwork>(DenseNetwork(critic_spec, init), cfg_.target_mode,
                                          cfg_.target_delay, cfg_.polyak_tau);

    ActorSpec aspec;
    aspec.lowdim_dim = dims_.actor_lowdim;
    aspec.image_h = dims_.image_h;
    aspec.image_w = dims_.image_w;
    aspec.image_c = dims_.image_c;
    aspec.trunk_hidden = cfg_.actor_hidden;
    aspec.action_dim = dims_.action;
    aspec.aux_dim = dims_.aux_dim();
    aspec.action_head_init_scale = cfg_.actor_final_scale;
    actor_ = TargetPair<ActorNetwork>(ActorNetwork(aspec, init), cfg_.target_mode,
                                      cfg_.target_delay, cfg_.polyak_tau);

    const AdamConfigPair ac = adam_configs();
    adam_c1_ = Adam(ac.critic, critic1_.live().param_count());
    if (cfg_.toggles.twin_critic) adam_c2_ = Adam(ac.critic, critic2_.live().param_count());
    adam_actor_ = Adam(ac.actor, actor_.live().param_count());
  }

  const AgentConfig& config() const { return cfg_; }
  const AgentDims& dims() const { return dims_; }
  std::uint64_t update_count() const { return update_count_; }
  std::uint64_t reset_demo_fallbacks() const { return reset_demo_fallbacks_; }

  TargetPair<DenseNetwork>& critic1() { return critic1_; }
  TargetPair<DenseNetwork>& critic2() { return critic2_; }
  TargetPair<ActorNetwork>& actor() { return actor_; }
  const TargetPair<DenseNetwork>& critic1() const { return critic1_; }
  const TargetPair<DenseNetwork>& critic2() const { return critic2_; }
  const TargetPair<ActorNetwork>& actor() const { return actor_; }

  void set_demo_snapshot_count(std::size_t n) { demo_snapshot_count_ = n; }
  std::size_t demo_snapshot_count() const { return demo_snapshot_count_; }

  /// y_1step = r + gamma (1-done) min_i Qi*(s', pi*(o'));
  /// y_nstep = R_k + gamma^k (1-tail_done) min_i Qi*(s_k, pi*(o_k)).
  /// No smoothing noise is added to the target action.
  void critic_targets(const SampleBatch& batch, std::vector<double>& y1,
                      std::vector<double>& yn) const {
    const std::size_t b = batch.segments.size();
    y1.resize(b);
    yn.resize(b);
    ActorNetwork::Workspace aws;
    for (std::size_t i = 0; i < b; ++i) {
      const NStepSegment& seg = *batch.segments[i];
      const auto& t = seg.head;
      {
        actor_.target().forward(t.next_actor_obs, t.next_actor_image, aws);
        const double q = target_min_q(critic_state(t.next_full_state, t.next_actor_obs),
                                      actor_.target().action(aws));
        y1[i] = t.reward + cfg_.gamma * (t.done ? 0.0 : 1.0) * q;
      }
      {
        actor_.target().forward(seg.tail_obs, seg.tail_image, aws);
        const double q = target_min_q(critic_state(seg.tail_state, seg.tail_obs),
                                      actor_.target().action(aws));
        double g = 1.0;
        for (int k = 0; k < seg.horizon; ++k) g *= cfg_.gamma;
        yn[i] = seg.discounted_return + g * (seg.tail_done ? 0.0 : 1.0) * q;
      }
    }
  }

  /// One gradient step on each critic against the shared targets. Returns
  /// the per-sample squared errors (pre-weighting) for priority updates.
  CriticUpdateResult critic_update(const SampleBatch& batch) {
    const std::size_t b = batch.segments.size();
    std::vector<double> y1, yn;
    critic_targets(batch, y1, yn);

    CriticUpdateResult res;
    res.per_sample_1step.assign(b, 0.0);
    res.per_sample_nstep.assign(b, 0.0);
    const int n_critics = cfg_.toggles.twin_critic ? 2 : 1;
    const bool use_nstep = cfg_.toggles.nstep;

    for (int c = 0; c < n_critics; ++c) {
      DenseNetwork& net = c == 0 ? critic1_.live() : critic2_.live();
      Adam& adam = c == 0 ? adam_c1_ : adam_c2_;
      std::vector<double> grad(net.param_count(), 0.0);
      DenseNetwork::Workspace ws;
      double weighted = 0.0;
      for (std::size_t i = 0; i < b; ++i) {
        const NStepSegment& seg = *batch.segments[i];
        const double w = sample_weight(batch, i);
        const std::vector<double> input =
            critic_input(critic_state(seg.head.full_state, seg.head.actor_obs), seg.head.action);
        net.forward(input, ws, true);
        const double q = net.output(ws)[0];
        const double e1 = q - y1[i];
        const double en = use_nstep ? q - yn[i] : 0.0;
        res.per_sample_1step[i] += e1 * e1 / double(n_critics);
        res.per_sample_nstep[i] += use_nstep ? en * en / double(n_critics) : 0.0;
        weighted += w * (cfg_.lambda_1step * e1 * e1 +
                         (use_nstep ? cfg_.lambda_nstep * en * en : 0.0)) /
                    double(b);
        const double dq = w *
                          (cfg_.lambda_1step * 2.0 * e1 +
                           (use_nstep ? cfg_.lambda_nstep * 2.0 * en : 0.0)) /
                          double(b);
        net.backward(ws, {dq}, grad);
      }
      double l2 = 0.0;
      {
        auto& p = net.params();
        for (std::size_t j = 0; j < p.size(); ++j) {
          l2 += p[j] * p[j];
          grad[j] += 2.0 * cfg_.lambda_l2 * p[j];
        }
      }
      const double objective = weighted + cfg_.lambda_l2 * l2;
      if (!std::isfinite(objective))
        throw NumericError("agent: non-finite critic loss (critic " + std::to_string(c + 1) +
                           ")");
      if (c == 0) res.weighted_objective = objective;
      adam.step(net.params(), grad);
    }
    for (std::size_t i = 0; i < b; ++i) {
      res.mean_1step += res.per_sample_1step[i] / double(b);
      res.mean_nstep += res.per_sample_nstep[i] / double(b);
    }
    return res;
  }

  /// Deterministic policy gradient through critic 1 (its parameters stay
  /// frozen here), plus Q-filtered behavioural cloning on demo samples and
  /// the auxiliary feature losses.
  ActorUpdateResult actor_update(const SampleBatch& batch) {
    const std::size_t b = batch.segments.size();
    ActorNetwork& net = actor_.live();
    std::vector<double> grad(net.param_count(), 0.0);
    ActorNetwork::Workspace aws;
    DenseNetwork::Workspace cws;
    ActorUpdateResult res;
    const int n_aux = dims_.aux_dim();
    for (std::size_t i = 0; i < b; ++i) {
      const NStepSegment& seg = *batch.segments[i];
      const auto& t = seg.head;
      const double w = sample_weight(batch, i);
      net.forward(t.actor_obs, t.actor_image, aws, true);
      const std::vector<double>& pi_a = net.action(aws);

      const std::vector<double> state = critic_state(t.full_state, t.actor_obs);
      critic1_.live().forward(critic_input(state, pi_a), cws);
      const double q_pi = critic1_.live().output(cws)[0];
      res.pg += -w * q_pi / double(b);
      std::vector<double> d_input;
      critic1_.live().backward(cws, {-w / double(b)}, {}, &d_input);
      std::vector<double> d_action(d_input.end() - dims_.action, d_input.end());

      if (cfg_.toggles.bc_loss && t.is_demo) {
        bool apply = true;
        if (cfg_.toggles.q_filter) {
          const double q_demo = critic1_.live().evaluate_scalar(critic_input(state, t.action));
          apply = q_demo > q_pi;
        }
        if (apply) {
          ++res.bc_active;
          for (int j = 0; j < dims_.action; ++j) {
            const double diff = pi_a[j] - t.action[j];
            res.bc += cfg_.lambda_bc * diff * diff / double(b);
            d_action[j] += cfg_.lambda_bc * 2.0 * diff / double(b);
          }
        }
      }

      std::vector<double> d_aux;
      if (cfg_.toggles.aux_outputs && n_aux > 0) {
        const std::vector<double>& pred = net.aux(aws);
        d_aux.assign(n_aux, 0.0);
        for (int j = 0; j < n_aux; ++j) {
          const double target = t.full_state[dims_.aux_indices[j]];
          const double diff = pred[j] - target;
          res.aux += aux_w_[j] * diff * diff / (double(n_aux) * double(b));
          d_aux[j] = aux_w_[j] * 2.0 * diff / (double(n_aux) * double(b));
        }
      }
      net.backward(aws, std::move(d_action), std::move(d_aux), grad);
    }
    res.total = res.pg + res.bc + res.aux;
    if (!std::isfinite(res.total)) throw NumericError("agent: non-finite actor loss");
    adam_actor_.step(net.params(), grad);
    return res;
  }

  std::array<double, 4> select_action(std::span<const double> lowdim,
                                      std::span<const double> image, bool explore) {
    ActorNetwork::Workspace ws;
    actor_.live().forward(lowdim, image, ws);
    const auto& a = actor_.live().action(ws);
    std::array<double, 4> out{};
    for (int j = 0; j < dims_.action; ++j) {
      double v = a[j];
      if (explore && cfg_.sigma_explore > 0.0) v += rng_.normal(0.0, cfg_.sigma_explore);
      out[j] = std::clamp(v, -1.0, 1.0);
    }
    return out;
  }

  /// One full training step: sample, critic step, priority feedback, delayed
  /// actor step, target sync.
  StepInfo train_step(PrioritizedBuffer& buffer) {
    SampleBatch batch = buffer.sample(std::size_t(cfg_.batch_size));
    StepInfo info;
    const CriticUpdateResult cres = critic_update(batch);
    info.critic_1step = cres.mean_1step;
    info.critic_nstep = cres.mean_nstep;
    buffer.update_priorities(batch.indices, batch.generations, cres.per_sample_1step,
                             cres.per_sample_nstep);
    ++update_count_;
    if (update_count_ % std::uint64_t(cfg_.target_delay) == 0) {
      const ActorUpdateResult ares = actor_update(batch);
      info.actor = ares.total;
      info.bc = ares.bc;
      info.aux = ares.aux;
      info.actor_updated = true;
    }
    critic1_.sync();
    if (cfg_.toggles.twin_critic) critic2_.sync();
    actor_.sync();
    std::size_t demo = 0;
    for (const auto* seg : batch.segments) demo += seg->head.is_demo ? 1 : 0;
    info.demo_fraction = double(demo) / double(batch.segments.size());
    return info;
  }

  /// Training on demonstrations only, before any environment interaction.
  std::vector<StepInfo> pretrain(PrioritizedBuffer& buffer, int steps) {
    if (buffer.size() == 0) throw EmptyBufferError("agent: pretrain on empty buffer");
    if (buffer.demo_count() != buffer.size())
      throw std::invalid_argument("agent: pretrain requires a demonstrations-only buffer");
    std::vector<StepInfo> out;
    out.reserve(std::size_t(steps));
    for (int i = 0; i < steps; ++i) out.push_back(train_step(buffer));
    return out;
  }

  /// With probability reset_demo_prob, asks the environment to restore a
  /// uniformly chosen recorded demo snapshot; otherwise a standard reset.
  ResetDirective begin_episode(Rng& episode_rng) {
    ResetDirective d;
    if (!cfg_.toggles.reset_demo || cfg_.reset_demo_prob <= 0.0) return d;
    if (!episode_rng.bernoulli(cfg_.reset_demo_prob)) return d;
    if (demo_snapshot_count_ == 0) {
      ++reset_demo_fallbacks_;
      return d;
    }
    d.kind = ResetDirective::Kind::demo_snapshot;
    d.snapshot_index = std::size_t(episode_rng.uniform_index(demo_snapshot_count_));
    return d;
  }

  void save(Container& c, const std::string& prefix) const {
    critic1_.live().collect(c, prefix + "critic1/");
    critic1_.target().collect(c, prefix + "critic1_target/");
    if (cfg_.toggles.twin_critic) {
      critic2_.live().collect(c, prefix + "critic2/");
      critic2_.target().collect(c, prefix + "critic2_target/");
    }
    actor_.live().collect(c, prefix + "actor/");
    actor_.target().collect(c, prefix + "actor_target/");
    adam_c1_.save(c, prefix + "adam_c1/");
    if (cfg_.toggles.twin_critic) adam_c2_.save(c, prefix + "adam_c2/");
    adam_actor_.save(c, prefix + "adam_actor/");
    c.put_i64(prefix + "counters", {4},
              {std::int64_t(update_count_), std::int64_t(critic1_.sync_calls()),
               std::int64_t(actor_.sync_calls()), std::int64_t(reset_demo_fallbacks_)});
    c.put_bytes(prefix + "rng", rng_.save_state());
  }

  void restore(const Container& c, const std::string& prefix) {
    critic1_.live().restore(c, prefix + "critic1/");
    critic1_.target().restore(c, prefix + "critic1_target/");
    if (cfg_.toggles.twin_critic) {
      critic2_.live().restore(c, prefix + "critic2/");
      critic2_.target().restore(c, prefix + "critic2_target/");
    }
    actor_.live().restore(c, prefix + "actor/");
    actor_.target().restore(c, prefix + "actor_target/");
    adam_c1_.restore(c, prefix + "adam_c1/");
    if (cfg_.toggles.twin_critic) adam_c2_.restore(c, prefix + "adam_c2/");
    adam_actor_.restore(c, prefix + "adam_actor/");
    const auto& counters = c.i64(prefix + "counters");
    update_count_ = std::uint64_t(counters.at(0));
    restore_sync_calls(critic1_, std::uint64_t(counters.at(1)));
    if (cfg_.toggles.twin_critic) restore_sync_calls(critic2_, std::uint64_t(counters.at(1)));
    restore_sync_calls(actor_, std::uint64_t(counters.at(2)));
    reset_demo_fallbacks_ = std::uint64_t(counters.at(3));
    rng_.load_state(c.bytes(prefix + "rng"));
  }

  int critic_state_dim() const {
    return cfg_.toggles.asymmetric ? dims_.full_state : dims_.actor_lowdim;
  }

  /// The state vector the critics consume for a given transition.
  std::vector<double> critic_state(const std::vector<double>& full_state,
                                   const std::vector<double>& actor_obs) const {
    return cfg_.toggles.asymmetric ? full_state : actor_obs;
  }

  template <class ActionT>
  std::vector<double> critic_input(const std::vector<double>& state,
                                   const ActionT& action) const {
    std::vector<double> in;
    in.reserve(state.size() + std::size_t(dims_.action));
    in.insert(in.end(), state.begin(), state.end());
    in.insert(in.end(), action.begin(), action.end());
    return in;
  }

 private:
  struct AdamConfigPair {
    approx::AdamConfig critic, actor;
  };
  AdamConfigPair adam_configs() const {
    approx::AdamConfig c{cfg_.critic_lr, cfg_.adam_beta1, cfg_.adam_beta2, cfg_.adam_epsilon};
    approx::AdamConfig a{cfg_.actor_lr, cfg_.adam_beta1, cfg_.adam_beta2, cfg_.adam_epsilon};
    return {c, a};
  }

  template <class ActionT>
  double target_min_q(const std::vector<double>& state, const ActionT& action) const {
    const std::vector<double> in = critic_input(state, action);
    const double q1 = critic1_.target().evaluate_scalar(in);
    if (!cfg_.toggles.twin_critic) return q1;
    const double q2 = critic2_.target().evaluate_scalar(in);
    return std::min(q1, q2);
  }

  double sample_weight(const SampleBatch& batch, std::size_t i) const {
    return cfg_.toggles.prioritized ? batch.is_weights[i] : 1.0;
  }

  template <class Net>
  static void restore_sync_calls(TargetPair<Net>& pair, std::uint64_t calls) {
    pair.set_sync_calls(calls);
  }

  AgentConfig cfg_;
  AgentDims dims_;
  Rng rng_;
  std::vector<double> aux_w_;
  TargetPair<DenseNetwork> critic1_, critic2_;
  TargetPair<ActorNetwork> actor_;
  Adam adam_c1_, adam_c2_, adam_actor_;
  std::uint64_t update_count_ = 0;
  std::size_t demo_snapshot_count_ = 0;
  std::uint64_t reset_demo_fallbacks_ = 0;
};

}  // namespace clothrl::agent
