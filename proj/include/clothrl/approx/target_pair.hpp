#pragma once

#include <cstdint>
#include <stdexcept>

namespace clothrl::approx {

enum class TargetMode { hard, polyak };

/// Live network plus its lagged target copy. In hard mode the target is
/// copied every `period` sync calls; in polyak mode it moves tau of the way
/// toward the live parameters on every call.
template <class Net>
class TargetPair {
 public:
  TargetPair() = default;
  TargetPair(Net live, TargetMode mode, int period, double tau)
      : live_(live), target_(std::move(live)), mode_(mode), period_(period), tau_(tau) {
    if (period_ < 1) throw std::invalid_argument("target: period must be >= 1");
    if (tau_ < 0.0 || tau_ > 1.0) throw std::invalid_argument("target: tau must be in [0,1]");
  }

  Net& live() { return live_; }
  const Net& live() const { return live_; }
  Net& target() { return target_; }
  const Net& target() const { return target_; }
  TargetMode mode() const { return mode_; }
  int period() const { return period_; }
  std::uint64_t sync_calls() const { return calls_; }

  void sync() {
    ++calls_;
    if (mode_ == TargetMode::hard) {
      if (calls_ % std::uint64_t(period_) == 0) force_sync();
    } else {
      auto& t = target_.params();
      const auto& l = live_.params();
      for (std::size_t i = 0; i < t.size(); ++i) t[i] = tau_ * l[i] + (1.0 - tau_) * t[i];
    }
  }

  void force_sync() { target_.params() = live_.params(); }

  // checkpoint restore support: target params are restored separately
  void set_sync_calls(std::uint64_t calls) { calls_ = calls; }

 private:
  Net live_, target_;
  TargetMode mode_ = TargetMode::hard;
  int period_ = 1;
  double tau_ = 0.005;
  std::uint64_t calls_ = 0;
};

}  // namespace clothrl::approx
