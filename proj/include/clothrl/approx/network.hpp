#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "clothrl/core/container.hpp"
#include "clothrl/core/errors.hpp"
#include "clothrl/core/rng.hpp"

namespace clothrl::approx {

enum class Activation { identity, relu, tanh };

inline double apply_activation(Activation a, double z) {
  switch (a) {
    case Activation::relu:
      return z > 0.0 ? z : 0.0;
    case Activation::tanh:
      return std::tanh(z);
    default:
      return z;
  }
}

// derivative w.r.t. the pre-activation, given pre z and post y
inline double activation_grad(Activation a, double z, double y) {
  switch (a) {
    case Activation::relu:
      return z > 0.0 ? 1.0 : 0.0;
    case Activation::tanh:
      return 1.0 - y * y;
    default:
      return 1.0;
  }
}

struct LayerSpec {
  int in = 0;
  int out = 0;
  Activation act = Activation::identity;
};

/// A stack of dense layers whose parameters live in an external flat array
/// (weights row-major [out][in], then biases, per layer). Keeping storage
/// flat lets one optimizer state cover a composite network.
class DenseStack {
 public:
  DenseStack() = default;
  DenseStack(std::vector<LayerSpec> specs, std::size_t offset)
      : specs_(std::move(specs)), offset_(offset) {
    std::size_t pos = offset_;
    for (const auto& s : specs_) {
      if (s.in <= 0 || s.out <= 0) throw ShapeError("dense: layer dims must be positive");
      w_off_.push_back(pos);
      pos += std::size_t(s.out) * std::size_t(s.in);
      b_off_.push_back(pos);
      pos += std::size_t(s.out);
    }
    end_ = pos;
  }

  const std::vector<LayerSpec>& specs() const { return specs_; }
  std::size_t offset() const { return offset_; }
  std::size_t end() const { return end_; }
  std::size_t param_count() const { return end_ - offset_; }
  int input_dim() const { return specs_.empty() ? 0 : specs_.front().in; }
  int output_dim() const { return specs_.empty() ? 0 : specs_.back().out; }

  /// Uniform fan-in init: U(-1/sqrt(in), 1/sqrt(in)); the last layer is
  /// additionally scaled by `final_scale`.
  void init(std::span<double> flat, Rng& rng, double final_scale = 1.0) const {
    for (std::size_t l = 0; l < specs_.size(); ++l) {
      const auto& s = specs_[l];
      const double bound = 1.0 / std::sqrt(double(s.in));
      const double scale = (l + 1 == specs_.size()) ? final_scale : 1.0;
      double* w = flat.data() + w_off_[l];
      for (std::size_t i = 0; i < std::size_t(s.out) * std::size_t(s.in); ++i)
        w[i] = scale * rng.uniform(-bound, bound);
      double* b = flat.data() + b_off_[l];
      for (int i = 0; i < s.out; ++i) b[i] = scale * rng.uniform(-bound, bound);
    }
  }

  struct Workspace {
    std::vector<double> input;
    std::vector<std::vector<double>> pre;   // per layer, pre-activation
    std::vector<std::vector<double>> post;  // per layer, post-activation
  };

  void forward(std::span<const double> flat, std::span<const double> x,
               Workspace& ws, bool check_finite = false) const {
    if (int(x.size()) != input_dim()) throw ShapeError("dense: input dimension mismatch");
    ws.input.assign(x.begin(), x.end());
    ws.pre.resize(specs_.size());
    ws.post.resize(specs_.size());
    const double* cur = ws.input.data();
    for (std::size_t l = 0; l < specs_.size(); ++l) {
      const auto& s = specs_[l];
      auto& pre = ws.pre[l];
      auto& post = ws.post[l];
      pre.resize(s.out);
      post.resize(s.out);
      const double* w = flat.data() + w_off_[l];
      const double* b = flat.data() + b_off_[l];
      for (int o = 0; o < s.out; ++o) {
        double acc = b[o];
        const double* row = w + std::size_t(o) * std::size_t(s.in);
        for (int i = 0; i < s.in; ++i) acc += row[i] * cur[i];
        pre[o] = acc;
        post[o] = apply_activation(s.act, acc);
      }
      if (check_finite) {
        for (int o = 0; o < s.out; ++o)
          if (!std::isfinite(post[o]))
            throw NumericError("dense: non-finite activation at layer " + std::to_string(l));
      }
      cur = post.data();
    }
  }

  const std::vector<double>& output(const Workspace& ws) const { return ws.post.back(); }

  std::vector<double> evaluate(std::span<const double> flat, std::span<const double> x) const {
    Workspace ws;
    forward(flat, x, ws);
    return output(ws);
  }

  /// Reverse pass. `delta` holds dL/d(output) on entry and is consumed.
  /// Parameter gradients are accumulated into `grad_flat` (same layout as
  /// the parameter array) unless it is empty; dL/d(input) is written to
  /// `dx` when non-null.
  void backward(std::span<const double> flat, const Workspace& ws, std::vector<double> delta,
                std::span<double> grad_flat, std::vector<double>* dx = nullptr) const {
    if (delta.size() != std::size_t(output_dim()))
      throw ShapeError("dense: output gradient dimension mismatch");
    std::vector<double> prev;
    for (std::size_t li = specs_.size(); li-- > 0;) {
      const auto& s = specs_[li];
      const auto& pre = ws.pre[li];
      const auto& post = ws.post[li];
      const std::vector<double>& in = li == 0 ? ws.input : ws.post[li - 1];
      for (int o = 0; o < s.out; ++o) delta[o] *= activation_grad(s.act, pre[o], post[o]);
      const double* w = flat.data() + w_off_[li];
      if (!grad_flat.empty()) {
        double* gw = grad_flat.data() + w_off_[li];
        double* gb = grad_flat.data() + b_off_[li];
        for (int o = 0; o < s.out; ++o) {
          const double d = delta[o];
          gb[o] += d;
          double* grow = gw + std::size_t(o) * std::size_t(s.in);
          for (int i = 0; i < s.in; ++i) grow[i] += d * in[i];
        }
      }
      const bool need_dx = li > 0 || dx != nullptr;
      if (need_dx) {
        prev.assign(std::size_t(s.in), 0.0);
        for (int o = 0; o < s.out; ++o) {
          const double d = delta[o];
          const double* row = w + std::size_t(o) * std::size_t(s.in);
          for (int i = 0; i < s.in; ++i) prev[i] += d * row[i];
        }
        delta = prev;
      }
    }
    if (dx != nullptr) *dx = std::move(delta);
  }

  void collect(Container& c, const std::string& prefix, std::span<const double> flat) const {
    for (std::size_t l = 0; l < specs_.size(); ++l) {
      const auto& s = specs_[l];
      const std::string base = prefix + "L" + std::to_string(l) + "/";
      c.put_f64(base + "W", {std::uint64_t(s.out), std::uint64_t(s.in)},
                std::vector<double>(flat.begin() + w_off_[l],
                                    flat.begin() + w_off_[l] +
                                        std::size_t(s.out) * std::size_t(s.in)));
      c.put_f64(base + "b", {std::uint64_t(s.out)},
                std::vector<double>(flat.begin() + b_off_[l],
                                    flat.begin() + b_off_[l] + std::size_t(s.out)));
    }
  }

  void restore(const Container& c, const std::string& prefix, std::span<double> flat) const {
    for (std::size_t l = 0; l < specs_.size(); ++l) {
      const auto& s = specs_[l];
      const std::string base = prefix + "L" + std::to_string(l) + "/";
      const auto& w = c.f64(base + "W");
      const auto& b = c.f64(base + "b");
      if (w.size() != std::size_t(s.out) * std::size_t(s.in) || b.size() != std::size_t(s.out))
        throw ShapeError("checkpoint: topology mismatch at " + base);
      std::copy(w.begin(), w.end(), flat.begin() + w_off_[l]);
      std::copy(b.begin(), b.end(), flat.begin() + b_off_[l]);
    }
  }

 private:
  std::vector<LayerSpec> specs_;
  std::size_t offset_ = 0;
  std::size_t end_ = 0;
  std::vector<std::size_t> w_off_, b_off_;
};

/// Self-contained dense network: a DenseStack plus owned flat parameters.
class DenseNetwork {
 public:
  DenseNetwork() = default;
  DenseNetwork(std::vector<LayerSpec> specs, Rng& rng, double final_scale = 1.0)
      : stack_(std::move(specs), 0) {
    flat_.assign(stack_.param_count(), 0.0);
    stack_.init(flat_, rng, final_scale);
  }

  static std::vector<LayerSpec> mlp_spec(int in, const std::vector<int>& hidden, int out,
                                         Activation hidden_act, Activation out_act) {
    std::vector<LayerSpec> specs;
    int cur = in;
    for (int h : hidden) {
      specs.push_back({cur, h, hidden_act});
      cur = h;
    }
    specs.push_back({cur, out, out_act});
    return specs;
  }

  const DenseStack& stack() const { return stack_; }
  int input_dim() const { return stack_.input_dim(); }
  int output_dim() const { return stack_.output_dim(); }
  std::size_t param_count() const { return stack_.param_count(); }
  std::vector<double>& params() { return flat_; }
  const std::vector<double>& params() const { return flat_; }

  using Workspace = DenseStack::Workspace;

  void forward(std::span<const double> x, Workspace& ws, bool check_finite = false) const {
    stack_.forward(flat_, x, ws, check_finite);
  }
  const std::vector<double>& output(const Workspace& ws) const { return stack_.output(ws); }
  std::vector<double> evaluate(std::span<const double> x) const {
    return stack_.evaluate(flat_, x);
  }
  double evaluate_scalar(std::span<const double> x) const { return evaluate(x)[0]; }

  void backward(const Workspace& ws, std::vector<double> delta, std::span<double> grad_flat,
                std::vector<double>* dx = nullptr) const {
    stack_.backward(flat_, ws, std::move(delta), grad_flat, dx);
  }

  void collect(Container& c, const std::string& prefix) const { stack_.collect(c, prefix, flat_); }
  void restore(const Container& c, const std::string& prefix) {
    stack_.restore(c, prefix, flat_);
  }

 private:
  DenseStack stack_;
  std::vector<double> flat_;
};

}  // namespace clothrl::approx
