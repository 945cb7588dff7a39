#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "clothrl/core/container.hpp"
#include "clothrl/core/errors.hpp"

namespace clothrl::approx {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Adaptive-moment optimizer over one flat parameter array.
class Adam {
 public:
  Adam() = default;
  Adam(AdamConfig cfg, std::size_t n) : cfg_(cfg), m_(n, 0.0), v_(n, 0.0) {}

  const AdamConfig& config() const { return cfg_; }
  std::uint64_t step_count() const { return t_; }

  void step(std::span<double> params, std::span<const double> grads) {
    if (params.size() != m_.size() || grads.size() != m_.size())
      throw ShapeError("adam: parameter/gradient size mismatch");
    ++t_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, double(t_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, double(t_));
    for (std::size_t i = 0; i < m_.size(); ++i) {
      const double g = grads[i];
      m_[i] = cfg_.beta1 * m_[i] + (1.0 - cfg_.beta1) * g;
      v_[i] = cfg_.beta2 * v_[i] + (1.0 - cfg_.beta2) * g * g;
      const double mhat = m_[i] / bc1;
      const double vhat = v_[i] / bc2;
      params[i] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.epsilon);
    }
  }

  void save(Container& c, const std::string& prefix) const {
    c.put_f64(prefix + "m", {m_.size()}, m_);
    c.put_f64(prefix + "v", {v_.size()}, v_);
    c.put_scalar_i64(prefix + "t", std::int64_t(t_));
    c.put_f64(prefix + "config", {4}, {cfg_.lr, cfg_.beta1, cfg_.beta2, cfg_.epsilon});
  }

  void restore(const Container& c, const std::string& prefix) {
    const auto& m = c.f64(prefix + "m");
    const auto& v = c.f64(prefix + "v");
    if (m.size() != m_.size() || v.size() != v_.size())
      throw ShapeError("adam: checkpoint size mismatch at " + prefix);
    m_ = m;
    v_ = v;
    t_ = std::uint64_t(c.scalar_i64(prefix + "t"));
    const auto& cf = c.f64(prefix + "config");
    cfg_ = {cf.at(0), cf.at(1), cf.at(2), cf.at(3)};
  }

 private:
  AdamConfig cfg_;
  std::vector<double> m_, v_;
  std::uint64_t t_ = 0;
};

}  // namespace clothrl::approx
