#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <set>
#include <span>
#include <vector>

#include "clothrl/core/container.hpp"
#include "clothrl/core/errors.hpp"
#include "clothrl/core/rng.hpp"
#include "clothrl/experience/sum_tree.hpp"
#include "clothrl/experience/transition.hpp"

namespace clothrl::experience {

/// Minibatch drawn from the buffer. Segment pointers stay valid until the
/// next insert; priority updates carry (slot, generation) so entries evicted
/// in between are skipped instead of corrupted.
struct SampleBatch {
  std::vector<std::size_t> indices;
  std::vector<std::uint64_t> generations;
  std::vector<const NStepSegment*> segments;
  std::vector<double> is_weights;  // max-normalized, in (0, 1]
};

/// Fixed-capacity prioritized replay store. Demonstrations are pinned
/// (never evicted); other entries are evicted FIFO when the buffer is full.
/// Sampling is stratified over the cumulative p^alpha mass; importance
/// weights are (N * P(i))^-beta divided by the batch maximum.
class PrioritizedBuffer {
 public:
  struct Options {
    std::size_t capacity = 1'000'000;
    double alpha = 0.6;
    double beta = 0.4;
    double epsilon = 1e-6;
    double epsilon_demo = 0.1;
    // When set, demo priorities get this fixed additive boost instead of the
    // minibatch-proportional term. Off by default.
    bool constant_demo_boost = false;
    double constant_demo_boost_value = 0.0;
  };

  PrioritizedBuffer(Options opt, Rng rng) : opt_(opt), rng_(rng), tree_(opt.capacity) {
    if (opt_.capacity == 0) throw std::invalid_argument("buffer: capacity must be positive");
    if (opt_.alpha < 0.0) throw std::invalid_argument("buffer: alpha must be >= 0");
    if (opt_.beta < 0.0 || opt_.beta > 1.0)
      throw std::invalid_argument("buffer: beta must be in [0, 1]");
    if (!(opt_.epsilon > 0.0)) throw std::invalid_argument("buffer: epsilon must be > 0");
    if (opt_.epsilon_demo < 0.0) throw std::invalid_argument("buffer: epsilon_demo must be >= 0");
    slots_.resize(opt_.capacity);
    for (std::size_t i = opt_.capacity; i > 0; --i) free_.push_back(i - 1);
  }

  const Options& options() const { return opt_; }
  std::size_t capacity() const { return opt_.capacity; }
  std::size_t size() const { return size_; }
  std::size_t demo_count() const { return demo_count_; }
  std::uint64_t stale_update_count() const { return stale_updates_; }

  bool occupied(std::size_t slot) const { return slots_.at(slot).occupied; }
  bool is_demo(std::size_t slot) const { return slots_.at(slot).is_demo; }
  double priority(std::size_t slot) const { return slots_.at(slot).raw_priority; }
  const NStepSegment& segment(std::size_t slot) const { return slots_.at(slot).seg; }

  double max_priority() const {
    return raw_priorities_.empty() ? 1.0 : *raw_priorities_.rbegin();
  }

  /// P(i) = p_i^alpha / sum_k p_k^alpha for an occupied slot.
  double sampling_probability(std::size_t slot) const {
    if (!slots_.at(slot).occupied) return 0.0;
    return tree_.get(slot) / tree_.total();
  }

  /// Stores a segment with priority equal to the current maximum (1.0 when
  /// empty). Demo entries are pinned; a non-demo insert into a buffer whose
  /// capacity is exhausted by demos fails.
  std::size_t insert(NStepSegment seg) {
    const bool demo = seg.head.is_demo;
    std::size_t slot;
    if (!free_.empty()) {
      slot = free_.back();
      free_.pop_back();
    } else {
      if (fifo_.empty()) {
        throw BufferExhaustedError(demo
                                       ? "buffer: full of pinned demonstrations (demo insert)"
                                       : "buffer: capacity exhausted by pinned demonstrations");
      }
      slot = fifo_.front();
      fifo_.pop_front();
      evict(slot);
    }
    const double p = max_priority();
    Slot& s = slots_[slot];
    s.seg = std::move(seg);
    s.occupied = true;
    s.is_demo = demo;
    s.raw_priority = p;
    raw_priorities_.insert(p);
    tree_.set(slot, std::pow(p, opt_.alpha));
    ++size_;
    if (demo)
      ++demo_count_;
    else
      fifo_.push_back(slot);
    return slot;
  }

  SampleBatch sample(std::size_t batch_size) {
    if (size_ == 0) throw EmptyBufferError("buffer: sample from empty buffer");
    if (batch_size == 0) throw std::invalid_argument("buffer: batch_size must be >= 1");
    const double total = tree_.total();
    SampleBatch batch;
    batch.indices.reserve(batch_size);
    batch.generations.reserve(batch_size);
    batch.segments.reserve(batch_size);
    batch.is_weights.reserve(batch_size);
    const double n = double(size_);
    double wmax = 0.0;
    for (std::size_t k = 0; k < batch_size; ++k) {
      // one draw per equal-mass stratum
      const double mass = (double(k) + rng_.uniform01()) * total / double(batch_size);
      const std::size_t slot = tree_.find_prefix(mass);
      const Slot& s = slots_[slot];
      const double prob = tree_.get(slot) / total;
      const double w = std::pow(1.0 / (n * prob), opt_.beta);
      batch.indices.push_back(slot);
      batch.generations.push_back(s.generation);
      batch.segments.push_back(&s.seg);
      batch.is_weights.push_back(w);
      wmax = std::max(wmax, w);
    }
    for (double& w : batch.is_weights) w /= wmax;
    return batch;
  }

  /// p_i = L_nstep + L_1step + eps, plus for demonstrations the boost term
  /// eps_D * max over the minibatch of the combined losses. Entries evicted
  /// since sampling are skipped and counted.
  void update_priorities(const std::vector<std::size_t>& slots,
                         const std::vector<std::uint64_t>& generations,
                         const std::vector<double>& loss_1step,
                         const std::vector<double>& loss_nstep) {
    const std::size_t n = slots.size();
    if (generations.size() != n || loss_1step.size() != n || loss_nstep.size() != n)
      throw std::invalid_argument("buffer: update_priorities size mismatch");
    double max_combined = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (loss_1step[i] < 0.0 || loss_nstep[i] < 0.0)
        throw std::invalid_argument("buffer: losses must be >= 0");
      max_combined = std::max(max_combined, loss_1step[i] + loss_nstep[i]);
    }
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t slot = slots[i];
      if (slot >= slots_.size()) throw std::out_of_range("buffer: slot out of range");
      Slot& s = slots_[slot];
      if (!s.occupied || s.generation != generations[i]) {
        ++stale_updates_;
        continue;
      }
      double p = loss_nstep[i] + loss_1step[i] + opt_.epsilon;
      if (s.is_demo) {
        p += opt_.constant_demo_boost ? opt_.constant_demo_boost_value
                                      : opt_.epsilon_demo * max_combined;
      }
      set_priority(slot, p);
    }
  }

  /// Slots currently holding demonstrations, ascending.
  std::vector<std::size_t> demo_slots() const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < slots_.size(); ++i)
      if (slots_[i].occupied && slots_[i].is_demo) out.push_back(i);
    return out;
  }

  void save(Container& c, const std::string& prefix) const {
    std::vector<std::int64_t> meta = {
        std::int64_t(opt_.capacity), std::int64_t(size_), std::int64_t(demo_count_),
        std::int64_t(stale_updates_)};
    c.put_i64(prefix + "meta", {meta.size()}, meta);
    c.put_f64(prefix + "options", {5},
              {opt_.alpha, opt_.beta, opt_.epsilon, opt_.epsilon_demo,
               opt_.constant_demo_boost ? opt_.constant_demo_boost_value : -1.0});
    c.put_bytes(prefix + "rng", rng_.save_state());
    std::vector<std::int64_t> fifo(fifo_.begin(), fifo_.end());
    c.put_i64(prefix + "fifo", {fifo.size()}, fifo);
    std::vector<std::int64_t> free(free_.begin(), free_.end());
    c.put_i64(prefix + "free", {free.size()}, free);

    std::vector<std::int64_t> slot_ids, gens, flags, horizons, dims;
    std::vector<double> priorities, scalars, payload;
    for (std::size_t i = 0; i < slots_.size(); ++i) {
      const Slot& s = slots_[i];
      if (!s.occupied) continue;
      slot_ids.push_back(std::int64_t(i));
      gens.push_back(std::int64_t(s.generation));
      flags.push_back((s.is_demo ? 1 : 0) | (s.seg.head.done ? 2 : 0) |
                      (s.seg.head.is_demo ? 4 : 0) | (s.seg.tail_done ? 8 : 0));
      horizons.push_back(s.seg.horizon);
      priorities.push_back(s.raw_priority);
      scalars.push_back(s.seg.head.reward);
      scalars.push_back(s.seg.discounted_return);
      const Transition& t = s.seg.head;
      const std::vector<const std::vector<double>*> fields = {
          &t.actor_obs, &t.actor_image, &t.full_state, &t.next_actor_obs,
          &t.next_actor_image, &t.next_full_state, &s.seg.tail_obs, &s.seg.tail_image,
          &s.seg.tail_state};
      for (const auto* f : fields) {
        dims.push_back(std::int64_t(f->size()));
        payload.insert(payload.end(), f->begin(), f->end());
      }
      payload.insert(payload.end(), t.action.begin(), t.action.end());
    }
    c.put_i64(prefix + "slot_ids", {slot_ids.size()}, slot_ids);
    c.put_i64(prefix + "generations", {gens.size()}, gens);
    c.put_i64(prefix + "flags", {flags.size()}, flags);
    c.put_i64(prefix + "horizons", {horizons.size()}, horizons);
    c.put_i64(prefix + "field_dims", {dims.size()}, dims);
    c.put_f64(prefix + "priorities", {priorities.size()}, priorities);
    c.put_f64(prefix + "scalars", {scalars.size()}, scalars);
    c.put_f64(prefix + "payload", {payload.size()}, payload);
  }

  static PrioritizedBuffer restore(const Container& c, const std::string& prefix) {
    const auto& meta = c.i64(prefix + "meta");
    const auto& optv = c.f64(prefix + "options");
    Options opt;
    opt.capacity = std::size_t(meta.at(0));
    opt.alpha = optv.at(0);
    opt.beta = optv.at(1);
    opt.epsilon = optv.at(2);
    opt.epsilon_demo = optv.at(3);
    opt.constant_demo_boost = optv.at(4) >= 0.0;
    opt.constant_demo_boost_value = opt.constant_demo_boost ? optv.at(4) : 0.0;
    PrioritizedBuffer b(opt, Rng(0));
    b.rng_.load_state(c.bytes(prefix + "rng"));
    b.free_.clear();
    for (auto v : c.i64(prefix + "free")) b.free_.push_back(std::size_t(v));
    b.fifo_.clear();
    for (auto v : c.i64(prefix + "fifo")) b.fifo_.push_back(std::size_t(v));

    const auto& slot_ids = c.i64(prefix + "slot_ids");
    const auto& gens = c.i64(prefix + "generations");
    const auto& flags = c.i64(prefix + "flags");
    const auto& horizons = c.i64(prefix + "horizons");
    const auto& dims = c.i64(prefix + "field_dims");
    const auto& priorities = c.f64(prefix + "priorities");
    const auto& scalars = c.f64(prefix + "scalars");
    const auto& payload = c.f64(prefix + "payload");
    std::size_t dim_pos = 0, pay_pos = 0;
    for (std::size_t e = 0; e < slot_ids.size(); ++e) {
      const std::size_t slot = std::size_t(slot_ids[e]);
      Slot& s = b.slots_.at(slot);
      s.occupied = true;
      s.generation = std::uint64_t(gens.at(e));
      s.is_demo = (flags.at(e) & 1) != 0;
      s.seg.head.done = (flags.at(e) & 2) != 0;
      s.seg.head.is_demo = (flags.at(e) & 4) != 0;
      s.seg.tail_done = (flags.at(e) & 8) != 0;
      s.seg.horizon = int(horizons.at(e));
      s.raw_priority = priorities.at(e);
      s.seg.head.reward = scalars.at(2 * e);
      s.seg.discounted_return = scalars.at(2 * e + 1);
      std::vector<std::vector<double>*> fields = {
          &s.seg.head.actor_obs, &s.seg.head.actor_image, &s.seg.head.full_state,
          &s.seg.head.next_actor_obs, &s.seg.head.next_actor_image,
          &s.seg.head.next_full_state, &s.seg.tail_obs, &s.seg.tail_image, &s.seg.tail_state};
      for (auto* f : fields) {
        const std::size_t d = std::size_t(dims.at(dim_pos++));
        f->assign(payload.begin() + pay_pos, payload.begin() + pay_pos + d);
        pay_pos += d;
      }
      for (int j = 0; j < 4; ++j) s.seg.head.action[j] = payload.at(pay_pos++);
      b.raw_priorities_.insert(s.raw_priority);
      b.tree_.set(slot, std::pow(s.raw_priority, b.opt_.alpha));
      ++b.size_;
      if (s.is_demo) ++b.demo_count_;
    }
    b.stale_updates_ = std::uint64_t(meta.at(3));
    return b;
  }

 private:
  struct Slot {
    NStepSegment seg;
    bool occupied = false;
    bool is_demo = false;
    std::uint64_t generation = 0;
    double raw_priority = 0.0;
  };

  void evict(std::size_t slot) {
    Slot& s = slots_[slot];
    auto it = raw_priorities_.find(s.raw_priority);
    raw_priorities_.erase(it);
    tree_.set(slot, 0.0);
    s.occupied = false;
    s.seg = NStepSegment{};
    ++s.generation;
    --size_;
  }

  void set_priority(std::size_t slot, double p) {
    Slot& s = slots_[slot];
    auto it = raw_priorities_.find(s.raw_priority);
    raw_priorities_.erase(it);
    s.raw_priority = p;
    raw_priorities_.insert(p);
    tree_.set(slot, std::pow(p, opt_.alpha));
  }

  Options opt_;
  Rng rng_;
  SumTree tree_;
  std::vector<Slot> slots_;
  std::multiset<double> raw_priorities_;
  std::deque<std::size_t> fifo_;   // non-demo slots, oldest first
  std::vector<std::size_t> free_;  // unoccupied slots
  std::size_t size_ = 0;
  std::size_t demo_count_ = 0;
  std::uint64_t stale_updates_ = 0;
};

}  // namespace clothrl::experience
