#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "stsgcn/config.hpp"
#include "stsgcn/encoder.hpp"
#include "stsgcn/ops.hpp"
#include "stsgcn/random.hpp"
#include "stsgcn/tape.hpp"
#include "stsgcn/tensor.hpp"

namespace stsgcn {

inline constexpr std::size_t kDecoderKernel = 3;

template <typename S>
struct DecoderStage {
  Tensor<S> kernel;  // [K, T or K, 3, 3]
  Tensor<S> bias;    // [K]
  Tensor<S> slope;   // [1]
};

template <typename S>
struct DecoderParams {
  std::vector<DecoderStage<S>> stages;
};

// Kernels and biases use the fan-in bound 1/sqrt(Cin * 9).
template <typename S>
DecoderParams<S> init_decoder(const ModelConfig& cfg, Rng& rng) {
  cfg.validate();
  DecoderParams<S> d;
  const std::size_t taps = kDecoderKernel * kDecoderKernel;
  for (std::size_t i = 0; i < cfg.decoder_layers; ++i) {
    const std::size_t cin = i == 0 ? cfg.observed : cfg.horizon;
    const double fan = static_cast<double>(cin * taps);
    DecoderStage<S> st;
    st.kernel = detail::uniform_init<S>(rng, {cfg.horizon, cin, kDecoderKernel, kDecoderKernel}, fan);
    st.bias = detail::uniform_init<S>(rng, {cfg.horizon}, fan);
    st.slope = Tensor<S>::full({1}, S(0.25), true);
    d.stages.push_back(std::move(st));
  }
  return d;
}

template <typename S>
std::vector<NamedTensor<S>> decoder_parameters(const DecoderParams<S>& d) {
  std::vector<NamedTensor<S>> out;
  for (std::size_t i = 0; i < d.stages.size(); ++i) {
    const std::string pre = "decoder.stage" + std::to_string(i) + ".";
    out.push_back({pre + "kernel", d.stages[i].kernel});
    out.push_back({pre + "bias", d.stages[i].bias});
    out.push_back({pre + "slope", d.stages[i].slope});
  }
  return out;
}

/// T*K*9 + K + (n_dec - 1)*(K*K*9 + K) + n_dec.
inline std::size_t decoder_param_count(const ModelConfig& cfg) {
  if (cfg.decoder_layers == 0) throw ConfigError("decoder needs at least one stage");
  const std::size_t taps = kDecoderKernel * kDecoderKernel;
  const std::size_t T = cfg.observed, K = cfg.horizon;
  return T * K * taps + K + (cfg.decoder_layers - 1) * (K * K * taps + K) + cfg.decoder_layers;
}

/// Maps the encoded [B,3,V,T] block to [B,3,V,K].
///
/// Frames become channels: [B,T,3,V] is convolved over the (coordinate, joint)
/// plane. Stage one maps T to K channels; every further stage refines with a
/// residual add of its own input.
template <typename S>
Tensor<S> decoder_forward(Tape<S>& tape, DecoderParams<S>& d, const Tensor<S>& Henc) {
  if (Henc.rank() != 4) throw DimensionError("decoder input must be [B,3,V,T], got " + shape_str(Henc.shape()));
  if (d.stages.empty()) throw ConfigError("decoder has no stages");
  if (Henc.dim(3) != d.stages[0].kernel.dim(1)) {
    throw DimensionError("decoder: frame (T) axis mismatch: expected " + std::to_string(d.stages[0].kernel.dim(1)) +
                         ", found " + std::to_string(Henc.dim(3)));
  }
  Tensor<S> X = permute(tape, Henc, {0, 3, 1, 2});
  for (std::size_t i = 0; i < d.stages.size(); ++i) {
    auto& st = d.stages[i];
    Tensor<S> Y = prelu(tape, conv2d(tape, X, st.kernel, st.bias), st.slope);
    X = i == 0 ? Y : add(tape, Y, X);
  }
  return permute(tape, X, {0, 2, 3, 1});
}

}  // namespace stsgcn
