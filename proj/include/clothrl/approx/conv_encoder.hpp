#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "clothrl/core/container.hpp"
#include "clothrl/core/errors.hpp"
#include "clothrl/core/rng.hpp"
#include "clothrl/approx/network.hpp"

namespace clothrl::approx {

struct ConvLayerSpec {
  int out_channels = 0;
  int kernel = 0;
  int stride = 1;
};

/// Strided valid convolutions with ReLU, over HWC-flattened images.
/// Weights per layer: [out_c][k][k][in_c], then biases [out_c]. Parameters
/// live in an external flat array, like DenseStack.
class ConvStack {
 public:
  ConvStack() = default;
  ConvStack(int in_h, int in_w, int in_c, std::vector<ConvLayerSpec> specs, std::size_t offset)
      : specs_(std::move(specs)), offset_(offset) {
    int h = in_h, w = in_w, c = in_c;
    std::size_t pos = offset_;
    for (const auto& s : specs_) {
      if (s.kernel <= 0 || s.stride <= 0 || s.out_channels <= 0)
        throw ShapeError("conv: bad layer spec");
      Dims d;
      d.in_h = h;
      d.in_w = w;
      d.in_c = c;
      d.out_h = (h - s.kernel) / s.stride + 1;
      d.out_w = (w - s.kernel) / s.stride + 1;
      d.out_c = s.out_channels;
      if (d.out_h <= 0 || d.out_w <= 0) throw ShapeError("conv: layer output collapses");
      d.w_off = pos;
      pos += std::size_t(d.out_c) * s.kernel * s.kernel * d.in_c;
      d.b_off = pos;
      pos += std::size_t(d.out_c);
      dims_.push_back(d);
      h = d.out_h;
      w = d.out_w;
      c = d.out_c;
    }
    end_ = pos;
  }

  std::size_t offset() const { return offset_; }
  std::size_t end() const { return end_; }
  std::size_t param_count() const { return end_ - offset_; }
  std::size_t input_size() const {
    return dims_.empty() ? 0
                         : std::size_t(dims_[0].in_h) * dims_[0].in_w * dims_[0].in_c;
  }
  std::size_t output_size() const {
    return dims_.empty() ? 0
                         : std::size_t(dims_.back().out_h) * dims_.back().out_w *
                               dims_.back().out_c;
  }

  void init(std::span<double> flat, Rng& rng) const {
    for (std::size_t l = 0; l < specs_.size(); ++l) {
      const auto& s = specs_[l];
      const auto& d = dims_[l];
      const double fan_in = double(s.kernel) * s.kernel * d.in_c;
      const double bound = 1.0 / std::sqrt(fan_in);
      double* w = flat.data() + d.w_off;
      const std::size_t nw = std::size_t(d.out_c) * s.kernel * s.kernel * d.in_c;
      for (std::size_t i = 0; i < nw; ++i) w[i] = rng.uniform(-bound, bound);
      double* b = flat.data() + d.b_off;
      for (int i = 0; i < d.out_c; ++i) b[i] = rng.uniform(-bound, bound);
    }
  }

  struct Workspace {
    std::vector<std::vector<double>> pre;   // per layer, HWC
    std::vector<std::vector<double>> post;  // per layer, HWC
    std::vector<double> input;
  };

  void forward(std::span<const double> flat, std::span<const double> image,
               Workspace& ws) const {
    if (image.size() != input_size()) throw ShapeError("conv: input size mismatch");
    ws.input.assign(image.begin(), image.end());
    ws.pre.resize(specs_.size());
    ws.post.resize(specs_.size());
    const double* cur = ws.input.data();
    for (std::size_t l = 0; l < specs_.size(); ++l) {
      const auto& s = specs_[l];
      const auto& d = dims_[l];
      auto& pre = ws.pre[l];
      auto& post = ws.post[l];
      pre.assign(std::size_t(d.out_h) * d.out_w * d.out_c, 0.0);
      post.resize(pre.size());
      const double* w = flat.data() + d.w_off;
      const double* b = flat.data() + d.b_off;
      for (int oy = 0; oy < d.out_h; ++oy)
        for (int ox = 0; ox < d.out_w; ++ox)
          for (int oc = 0; oc < d.out_c; ++oc) {
            double acc = b[oc];
            for (int ky = 0; ky < s.kernel; ++ky) {
              const int iy = oy * s.stride + ky;
              for (int kx = 0; kx < s.kernel; ++kx) {
                const int ix = ox * s.stride + kx;
                const double* in_px = cur + (std::size_t(iy) * d.in_w + ix) * d.in_c;
                const double* w_px =
                    w + ((std::size_t(oc) * s.kernel + ky) * s.kernel + kx) * d.in_c;
                for (int ic = 0; ic < d.in_c; ++ic) acc += w_px[ic] * in_px[ic];
              }
            }
            const std::size_t oi = (std::size_t(oy) * d.out_w + ox) * d.out_c + oc;
            pre[oi] = acc;
            post[oi] = acc > 0.0 ? acc : 0.0;
          }
      cur = post.data();
    }
  }

  const std::vector<double>& output(const Workspace& ws) const { return ws.post.back(); }

  void backward(std::span<const double> flat, const Workspace& ws, std::vector<double> delta,
                std::span<double> grad_flat, std::vector<double>* dx = nullptr) const {
    if (delta.size() != output_size()) throw ShapeError("conv: output grad size mismatch");
    std::vector<double> prev;
    for (std::size_t li = specs_.size(); li-- > 0;) {
      const auto& s = specs_[li];
      const auto& d = dims_[li];
      const auto& pre = ws.pre[li];
      const std::vector<double>& in = li == 0 ? ws.input : ws.post[li - 1];
      for (std::size_t i = 0; i < delta.size(); ++i)
        if (pre[i] <= 0.0) delta[i] = 0.0;
      const double* w = flat.data() + d.w_off;
      const bool need_dx = li > 0 || dx != nullptr;
      if (need_dx) prev.assign(std::size_t(d.in_h) * d.in_w * d.in_c, 0.0);
      double* gw = grad_flat.empty() ? nullptr : grad_flat.data() + d.w_off;
      double* gb = grad_flat.empty() ? nullptr : grad_flat.data() + d.b_off;
      for (int oy = 0; oy < d.out_h; ++oy)
        for (int ox = 0; ox < d.out_w; ++ox)
          for (int oc = 0; oc < d.out_c; ++oc) {
            const double dv = delta[(std::size_t(oy) * d.out_w + ox) * d.out_c + oc];
            if (dv == 0.0) continue;
            if (gb) gb[oc] += dv;
            for (int ky = 0; ky < s.kernel; ++ky) {
              const int iy = oy * s.stride + ky;
              for (int kx = 0; kx < s.kernel; ++kx) {
                const int ix = ox * s.stride + kx;
                const std::size_t in_base = (std::size_t(iy) * d.in_w + ix) * d.in_c;
                const std::size_t w_base =
                    ((std::size_t(oc) * s.kernel + ky) * s.kernel + kx) * d.in_c;
                if (gw)
                  for (int ic = 0; ic < d.in_c; ++ic)
                    gw[w_base + ic] += dv * in[in_base + ic];
                if (need_dx)
                  for (int ic = 0; ic < d.in_c; ++ic)
                    prev[in_base + ic] += dv * w[w_base + ic];
              }
            }
          }
      if (need_dx) delta = prev;
    }
    if (dx != nullptr) *dx = std::move(delta);
  }

  void collect(Container& c, const std::string& prefix, std::span<const double> flat) const {
    for (std::size_t l = 0; l < specs_.size(); ++l) {
      const auto& s = specs_[l];
      const auto& d = dims_[l];
      const std::string base = prefix + "C" + std::to_string(l) + "/";
      const std::size_t nw = std::size_t(d.out_c) * s.kernel * s.kernel * d.in_c;
      c.put_f64(base + "W",
                {std::uint64_t(d.out_c), std::uint64_t(s.kernel), std::uint64_t(s.kernel),
                 std::uint64_t(d.in_c)},
                std::vector<double>(flat.begin() + d.w_off, flat.begin() + d.w_off + nw));
      c.put_f64(base + "b", {std::uint64_t(d.out_c)},
                std::vector<double>(flat.begin() + d.b_off,
                                    flat.begin() + d.b_off + std::size_t(d.out_c)));
    }
  }

  void restore(const Container& c, const std::string& prefix, std::span<double> flat) const {
    for (std::size_t l = 0; l < specs_.size(); ++l) {
      const auto& s = specs_[l];
      const auto& d = dims_[l];
      const std::string base = prefix + "C" + std::to_string(l) + "/";
      const auto& w = c.f64(base + "W");
      const auto& b = c.f64(base + "b");
      const std::size_t nw = std::size_t(d.out_c) * s.kernel * s.kernel * d.in_c;
      if (w.size() != nw || b.size() != std::size_t(d.out_c))
        throw ShapeError("checkpoint: conv topology mismatch at " + base);
      std::copy(w.begin(), w.end(), flat.begin() + d.w_off);
      std::copy(b.begin(), b.end(), flat.begin() + d.b_off);
    }
  }

 private:
  struct Dims {
    int in_h, in_w, in_c, out_h, out_w, out_c;
    std::size_t w_off, b_off;
  };
  std::vector<ConvLayerSpec> specs_;
  std::vector<Dims> dims_;
  std::size_t offset_ = 0;
  std::size_t end_ = 0;
};

inline std::vector<ConvLayerSpec> default_conv_spec() {
  return {{32, 8, 4}, {32, 4, 2}, {32, 3, 1}};
}

}  // namespace clothrl::approx
