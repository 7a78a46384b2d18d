#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "stsgcn/config.hpp"
#include "stsgcn/error.hpp"
#include "stsgcn/ops.hpp"
#include "stsgcn/random.hpp"
#include "stsgcn/tape.hpp"
#include "stsgcn/tensor.hpp"

namespace stsgcn {

template <typename S>
struct NamedTensor {
  std::string name;
  Tensor<S> tensor;
};

/// Trainable state of one graph-convolution layer.
///
/// Which fields are populated depends on the variant:
///   Separable, SeparableShared: As [T,V,V], At [V,T,T]
///   Full:                       Ast [V,T,V,T]
///   Distinct:                   As, At, plus the spatial-stage W_space, bn_space, slope_space
/// For SeparableShared the As/At handles of every layer alias the same storage.
template <typename S>
struct EncoderLayerParams {
  Tensor<S> As;
  Tensor<S> At;
  Tensor<S> Ast;
  Tensor<S> W;  // [C_l, C_{l+1}]; temporal stage for Distinct
  Tensor<S> bn_scale, bn_shift;
  BatchNormStats<S> bn;
  Tensor<S> slope;
  Tensor<S> W_space;  // Distinct only: [C_{l+1}, C_{l+1}]
  Tensor<S> bn_space_scale, bn_space_shift;
  BatchNormStats<S> bn_space;
  Tensor<S> slope_space;
  Tensor<S> R;  // residual projection [C_l, C_{l+1}]

  std::size_t in_channels() const { return W.dim(0); }
  std::size_t out_channels() const { return W.dim(1); }
};

template <typename S>
struct EncoderParams {
  EncoderVariant variant = EncoderVariant::Separable;
  bool batch_norm = true;
  std::vector<EncoderLayerParams<S>> layers;
};

namespace detail {

template <typename S>
Tensor<S> uniform_init(Rng& rng, Shape shape, double fan) {
  const double bound = 1.0 / std::sqrt(fan);
  Tensor<S> t(std::move(shape), true);
  for (S& v : t.data()) v = static_cast<S>(rng.uniform(-bound, bound));
  return t;
}

}  // namespace detail

/// Draws every adjacency, projection and residual entry from
/// uniform(-1/sqrt(f), 1/sqrt(f)), f being the matrix's column count (the last
/// extent; V*T for the dense space-time matrix viewed as VT x VT). Batchnorm
/// starts at scale 1, shift 0 and PReLU slopes at 0.25.
template <typename S>
EncoderParams<S> init_encoder(const ModelConfig& cfg, Rng& rng) {
  cfg.validate();
  const std::size_t V = cfg.joints, T = cfg.observed;
  EncoderParams<S> p;
  p.variant = cfg.variant;
  p.batch_norm = cfg.batch_norm;

  Tensor<S> shared_As, shared_At;
  if (cfg.variant == EncoderVariant::SeparableShared) {
    shared_As = detail::uniform_init<S>(rng, {T, V, V}, static_cast<double>(V));
    shared_At = detail::uniform_init<S>(rng, {V, T, T}, static_cast<double>(T));
  }
  for (std::size_t l = 0; l + 1 < cfg.widths.size(); ++l) {
    const std::size_t cin = cfg.widths[l], cout = cfg.widths[l + 1];
    EncoderLayerParams<S> layer;
    switch (cfg.variant) {
      case EncoderVariant::Separable:
      case EncoderVariant::Distinct:
        layer.As = detail::uniform_init<S>(rng, {T, V, V}, static_cast<double>(V));
        layer.At = detail::uniform_init<S>(rng, {V, T, T}, static_cast<double>(T));
        break;
      case EncoderVariant::SeparableShared:
        layer.As = shared_As;
        layer.At = shared_At;
        break;
      case EncoderVariant::Full:
        layer.Ast = detail::uniform_init<S>(rng, {V, T, V, T}, static_cast<double>(V * T));
        break;
    }
    layer.W = detail::uniform_init<S>(rng, {cin, cout}, static_cast<double>(cout));
    layer.bn_scale = Tensor<S>::full({cout}, S{1}, true);
    layer.bn_shift = Tensor<S>::zeros({cout}, true);
    layer.bn = BatchNormStats<S>::make(cout);
    layer.slope = Tensor<S>::full({1}, S(0.25), true);
    if (cfg.variant == EncoderVariant::Distinct) {
      layer.W_space = detail::uniform_init<S>(rng, {cout, cout}, static_cast<double>(cout));
      layer.bn_space_scale = Tensor<S>::full({cout}, S{1}, true);
      layer.bn_space_shift = Tensor<S>::zeros({cout}, true);
      layer.bn_space = BatchNormStats<S>::make(cout);
      layer.slope_space = Tensor<S>::full({1}, S(0.25), true);
    }
    layer.R = detail::uniform_init<S>(rng, {cin, cout}, static_cast<double>(cout));
    p.layers.push_back(std::move(layer));
  }
  return p;
}

/// Trainable tensors in a fixed order. Shared adjacencies appear once.
template <typename S>
std::vector<NamedTensor<S>> encoder_parameters(const EncoderParams<S>& p) {
  std::vector<NamedTensor<S>> out;
  const bool shared = p.variant == EncoderVariant::SeparableShared;
  if (shared && !p.layers.empty()) {
    out.push_back({"encoder.shared.As", p.layers[0].As});
    out.push_back({"encoder.shared.At", p.layers[0].At});
  }
  for (std::size_t l = 0; l < p.layers.size(); ++l) {
    const auto& L = p.layers[l];
    const std::string pre = "encoder.layer" + std::to_string(l) + ".";
    if (p.variant == EncoderVariant::Full) {
      out.push_back({pre + "Ast", L.Ast});
    } else if (!shared) {
      out.push_back({pre + "As", L.As});
      out.push_back({pre + "At", L.At});
    }
    out.push_back({pre + "W", L.W});
    if (p.batch_norm) {
      out.push_back({pre + "bn.scale", L.bn_scale});
      out.push_back({pre + "bn.shift", L.bn_shift});
    }
    out.push_back({pre + "slope", L.slope});
    if (p.variant == EncoderVariant::Distinct) {
      out.push_back({pre + "W_space", L.W_space});
      if (p.batch_norm) {
        out.push_back({pre + "bn_space.scale", L.bn_space_scale});
        out.push_back({pre + "bn_space.shift", L.bn_space_shift});
      }
      out.push_back({pre + "slope_space", L.slope_space});
    }
    out.push_back({pre + "R", L.R});
  }
  return out;
}

/// Batchnorm running statistics (not trained, but checkpointed).
template <typename S>
std::vector<NamedTensor<S>> encoder_buffers(const EncoderParams<S>& p) {
  std::vector<NamedTensor<S>> out;
  if (!p.batch_norm) return out;
  for (std::size_t l = 0; l < p.layers.size(); ++l) {
    const auto& L = p.layers[l];
    const std::string pre = "encoder.layer" + std::to_string(l) + ".";
    out.push_back({pre + "bn.running_mean", L.bn.mean});
    out.push_back({pre + "bn.running_var", L.bn.var});
    if (p.variant == EncoderVariant::Distinct) {
      out.push_back({pre + "bn_space.running_mean", L.bn_space.mean});
      out.push_back({pre + "bn_space.running_var", L.bn_space.var});
    }
  }
  return out;
}

namespace detail {

template <typename S>
Tensor<S> normalize_activate(Tape<S>& tape, const Tensor<S>& Z, Tensor<S>& scale, Tensor<S>& shift,
                             BatchNormStats<S>& stats, const Tensor<S>& slope, bool batch_norm,
                             bool train_mode) {
  Tensor<S> N = batch_norm ? stsgcn::batch_norm(tape, Z, scale, shift, stats, train_mode) : Z;
  return prelu(tape, N, slope);
}

}  // namespace detail

/// One encoder layer: graph contraction, channel projection, batchnorm, PReLU,
/// plus a projected residual of the layer input.
template <typename S>
Tensor<S> encoder_layer_forward(Tape<S>& tape, EncoderVariant variant, EncoderLayerParams<S>& L,
                                const Tensor<S>& H, bool train_mode, bool batch_norm = true) {
  if (H.rank() != 4) throw DimensionError("encoder layer input must be [B,C,V,T], got " + shape_str(H.shape()));
  if (!L.W.defined() || H.dim(1) != L.W.dim(0)) {
    throw DimensionError("encoder layer: channel axis mismatch: expected " +
                         (L.W.defined() ? std::to_string(L.W.dim(0)) : std::string("?")) + ", found " +
                         std::to_string(H.dim(1)));
  }
  Tensor<S> out;
  switch (variant) {
    case EncoderVariant::Separable:
    case EncoderVariant::SeparableShared: {
      if (!L.As.defined() || !L.At.defined()) throw ConfigError("separable layer is missing As/At");
      Tensor<S> Z = linear_channels(tape, contract_space(tape, L.As, contract_time(tape, L.At, H)), L.W);
      out = detail::normalize_activate(tape, Z, L.bn_scale, L.bn_shift, L.bn, L.slope, batch_norm, train_mode);
      break;
    }
    case EncoderVariant::Full: {
      if (!L.Ast.defined()) throw ConfigError("full layer is missing Ast");
      Tensor<S> Z = linear_channels(tape, contract_full(tape, L.Ast, H), L.W);
      out = detail::normalize_activate(tape, Z, L.bn_scale, L.bn_shift, L.bn, L.slope, batch_norm, train_mode);
      break;
    }
    case EncoderVariant::Distinct: {
      if (!L.As.defined() || !L.At.defined() || !L.W_space.defined()) {
        throw ConfigError("distinct layer is missing As/At/W_space");
      }
      Tensor<S> Zt = linear_channels(tape, contract_time(tape, L.At, H), L.W);
      Tensor<S> H1 = detail::normalize_activate(tape, Zt, L.bn_scale, L.bn_shift, L.bn, L.slope, batch_norm,
                                                train_mode);
      Tensor<S> Zs = linear_channels(tape, contract_space(tape, L.As, H1), L.W_space);
      out = detail::normalize_activate(tape, Zs, L.bn_space_scale, L.bn_space_shift, L.bn_space,
                                       L.slope_space, batch_norm, train_mode);
      break;
    }
  }
  return add(tape, out, linear_channels(tape, H, L.R));
}

template <typename S>
Tensor<S> encoder_forward(Tape<S>& tape, EncoderParams<S>& p, const Tensor<S>& X, bool train_mode) {
  if (X.rank() != 4) throw DimensionError("encoder input must be [B,3,V,T], got " + shape_str(X.shape()));
  Tensor<S> H = X;
  for (auto& layer : p.layers) H = encoder_layer_forward(tape, p.variant, layer, H, train_mode, p.batch_norm);
  return H;
}

}  // namespace stsgcn
