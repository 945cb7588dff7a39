#pragma once

#include <span>
#include <string>
#include <vector>

#include "clothrl/approx/conv_encoder.hpp"
#include "clothrl/approx/network.hpp"

namespace clothrl::approx {

struct ActorSpec {
  int lowdim_dim = 0;  // 0 when the low-dim input is withheld from the actor
  int image_h = 0, image_w = 0, image_c = 0;  // zeros when there is no image path
  std::vector<ConvLayerSpec> conv;            // used only with an image path
  std::vector<int> trunk_hidden = {256, 256};
  int action_dim = 4;
  int aux_dim = 0;  // auxiliary predictions branch off the trunk's last features
  double action_head_init_scale = 0.01;

  bool has_image() const { return image_h > 0 && image_w > 0 && image_c > 0; }
};

/// Policy network: optional conv encoder, dense trunk, a tanh action head
/// (outputs in [-1,1]^action_dim) and a linear auxiliary head off the same
/// trunk features. All parameters share one flat array.
class ActorNetwork {
 public:
  ActorNetwork() = default;
  ActorNetwork(ActorSpec spec, Rng& rng) : spec_(std::move(spec)) {
    if (spec_.trunk_hidden.empty()) throw ShapeError("actor: trunk needs hidden layers");
    std::size_t pos = 0;
    if (spec_.has_image()) {
      conv_ = ConvStack(spec_.image_h, spec_.image_w, spec_.image_c,
                        spec_.conv.empty() ? default_conv_spec() : spec_.conv, pos);
      pos = conv_.end();
    }
    const int feat_in = int(conv_.output_size()) + spec_.lowdim_dim;
    if (feat_in <= 0) throw ShapeError("actor: no input configured");
    std::vector<LayerSpec> trunk_spec;
    int cur = feat_in;
    for (int h : spec_.trunk_hidden) {
      trunk_spec.push_back({cur, h, Activation::relu});
      cur = h;
    }
    trunk_ = DenseStack(std::move(trunk_spec), pos);
    pos = trunk_.end();
    action_head_ = DenseStack({{cur, spec_.action_dim, Activation::tanh}}, pos);
    pos = action_head_.end();
    if (spec_.aux_dim > 0) {
      aux_head_ = DenseStack({{cur, spec_.aux_dim, Activation::identity}}, pos);
      pos = aux_head_.end();
    }
    flat_.assign(pos, 0.0);
    if (spec_.has_image()) conv_.init(flat_, rng);
    trunk_.init(flat_, rng);
    action_head_.init(flat_, rng, spec_.action_head_init_scale);
    if (spec_.aux_dim > 0) aux_head_.init(flat_, rng);
  }

  const ActorSpec& spec() const { return spec_; }
  std::size_t param_count() const { return flat_.size(); }
  std::vector<double>& params() { return flat_; }
  const std::vector<double>& params() const { return flat_; }

  struct Workspace {
    ConvStack::Workspace conv;
    DenseStack::Workspace trunk, action, aux;
    std::vector<double> feature;
  };

  void forward(std::span<const double> lowdim, std::span<const double> image, Workspace& ws,
               bool check_finite = false) const {
    ws.feature.clear();
    if (spec_.has_image()) {
      conv_.forward(flat_, image, ws.conv);
      const auto& cf = conv_.output(ws.conv);
      ws.feature.assign(cf.begin(), cf.end());
    }
    if (spec_.lowdim_dim > 0) {
      if (int(lowdim.size()) != spec_.lowdim_dim)
        throw ShapeError("actor: low-dim input dimension mismatch");
      ws.feature.insert(ws.feature.end(), lowdim.begin(), lowdim.end());
    }
    trunk_.forward(flat_, ws.feature, ws.trunk, check_finite);
    const auto& feat = trunk_.output(ws.trunk);
    action_head_.forward(flat_, feat, ws.action, check_finite);
    if (spec_.aux_dim > 0) aux_head_.forward(flat_, feat, ws.aux, check_finite);
  }

  const std::vector<double>& action(const Workspace& ws) const {
    return action_head_.output(ws.action);
  }
  const std::vector<double>& aux(const Workspace& ws) const { return aux_head_.output(ws.aux); }

  std::vector<double> act(std::span<const double> lowdim, std::span<const double> image) const {
    Workspace ws;
    forward(lowdim, image, ws);
    return action(ws);
  }

  /// Accumulates parameter gradients for dL/d(action) and (optionally)
  /// dL/d(aux) into `grad_flat`, sized like params().
  void backward(const Workspace& ws, std::vector<double> d_action, std::vector<double> d_aux,
                std::span<double> grad_flat) const {
    std::vector<double> d_feat;
    action_head_.backward(flat_, ws.action, std::move(d_action), grad_flat, &d_feat);
    if (spec_.aux_dim > 0 && !d_aux.empty()) {
      std::vector<double> d_feat_aux;
      aux_head_.backward(flat_, ws.aux, std::move(d_aux), grad_flat, &d_feat_aux);
      for (std::size_t i = 0; i < d_feat.size(); ++i) d_feat[i] += d_feat_aux[i];
    }
    if (spec_.has_image()) {
      std::vector<double> d_input;
      trunk_.backward(flat_, ws.trunk, std::move(d_feat), grad_flat, &d_input);
      std::vector<double> d_conv(d_input.begin(), d_input.begin() + conv_.output_size());
      conv_.backward(flat_, ws.conv, std::move(d_conv), grad_flat, nullptr);
    } else {
      trunk_.backward(flat_, ws.trunk, std::move(d_feat), grad_flat, nullptr);
    }
  }

  void collect(Container& c, const std::string& prefix) const {
    if (spec_.has_image()) conv_.collect(c, prefix + "conv/", flat_);
    trunk_.collect(c, prefix + "trunk/", flat_);
    action_head_.collect(c, prefix + "action/", flat_);
    if (spec_.aux_dim > 0) aux_head_.collect(c, prefix + "aux/", flat_);
  }

  void restore(const Container& c, const std::string& prefix) {
    if (spec_.has_image()) conv_.restore(c, prefix + "conv/", flat_);
    trunk_.restore(c, prefix + "trunk/", flat_);
    action_head_.restore(c, prefix + "action/", flat_);
    if (spec_.aux_dim > 0) aux_head_.restore(c, prefix + "aux/", flat_);
  }

 private:
  ActorSpec spec_;
  ConvStack conv_;
  DenseStack trunk_, action_head_, aux_head_;
  std::vector<double> flat_;
};

}  // namespace clothrl::approx
